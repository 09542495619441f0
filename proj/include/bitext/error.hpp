#pragma once

#include <stdexcept>
#include <string>

namespace bitext {

// Malformed or inconsistent input data (files, embeddings, lexicons).
// The command line tool maps this to exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller-supplied configuration. Exit status 1 in the tool.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bitext
