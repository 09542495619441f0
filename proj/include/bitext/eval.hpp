#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "bitext/error.hpp"
#include "bitext/io.hpp"

namespace bitext {

enum class EvalTask { document, sentence };

inline std::string_view to_string(EvalTask t) { return t == EvalTask::document ? "document" : "sentence"; }

inline EvalTask parse_task(std::string_view name) {
  if (name == "document") return EvalTask::document;
  if (name == "sentence") return EvalTask::sentence;
  throw UsageError("unknown evaluation task: " + std::string(name));
}

using IdPair = std::pair<std::string, std::string>;

struct GoldAlignment {
  std::set<IdPair> pairs;
};

struct EvalReport {
  EvalTask task = EvalTask::document;
  std::size_t gold_size = 0;
  std::size_t predicted_size = 0;
  std::size_t hits = 0;
  double recall = 0;
};

// Share of gold pairs found among the predictions. Precision is not
// reported: gold sets are known to be incomplete.
inline EvalReport recall(const std::set<IdPair>& predicted, const GoldAlignment& gold,
                         EvalTask task = EvalTask::document) {
  if (gold.pairs.empty()) throw DataError("gold alignment is empty");
  EvalReport r;
  r.task = task;
  r.gold_size = gold.pairs.size();
  r.predicted_size = predicted.size();
  for (const auto& p : gold.pairs)
    if (predicted.count(p)) ++r.hits;
  r.recall = double(r.hits) / double(r.gold_size);
  return r;
}

namespace detail {

// Sentence ids compare numerically, so "007" and "7" are the same sid.
inline std::string normalize_id(std::string_view id, EvalTask task) {
  if (task == EvalTask::document) return std::string(id);
  if (id.empty() || !std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw DataError("sentence id is not a non-negative integer: '" + std::string(id) + "'");
  const auto nz = id.find_first_not_of('0');
  return nz == std::string_view::npos ? "0" : std::string(id.substr(nz));
}

}  // namespace detail

// Reads the first two TSV columns of every line. With reject_duplicates a
// repeated pair is a data error (gold files); otherwise repeats collapse.
inline std::set<IdPair> load_id_pairs(const std::filesystem::path& path, EvalTask task, bool reject_duplicates = false) {
  auto in = io::open_input(path);
  std::set<IdPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = io::strip_cr(line);
    if (view.empty() || view.front() == '#') continue;
    const auto cols = io::split_tabs(view);
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (cols.size() < 2) throw DataError(where + "expected at least two tab-separated columns");
    try {
      auto inserted = pairs.emplace(detail::normalize_id(cols[0], task), detail::normalize_id(cols[1], task)).second;
      if (!inserted && reject_duplicates) throw DataError("duplicate pair");
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return pairs;
}

inline GoldAlignment load_gold(const std::filesystem::path& path, EvalTask task) {
  return GoldAlignment{load_id_pairs(path, task, true)};
}

}  // namespace bitext
