#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bitext/error.hpp"
#include "bitext/io.hpp"
#include "bitext/parallel.hpp"

namespace bitext {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

using Vector = std::span<const float>;

// Dense row-major matrix of sentence embeddings; row r belongs to the
// sentence with global ordinal r.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
      : rows_(rows), dim_(dim), values_(std::move(values)) {
    if (values_.size() != rows_ * dim_) throw std::invalid_argument("embedding values do not match rows x dim");
  }

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return rows_ == 0; }
  Vector row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }
  std::span<const float> values() const { return values_; }

  // Scales every non-zero row to unit L2 norm.
  void normalize_rows() {
    for (std::size_t r = 0; r < rows_; ++r) {
      float* p = values_.data() + r * dim_;
      double sq = 0;
      for (std::size_t c = 0; c < dim_; ++c) sq += double(p[c]) * p[c];
      if (sq == 0) continue;
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t c = 0; c < dim_; ++c) p[c] = static_cast<float>(p[c] * inv);
    }
  }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

namespace detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

}  // namespace detail

// Reads a headerless little-endian float32 dump of exactly
// expected_rows x dim values.
inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path, std::size_t dim, std::size_t expected_rows) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
  std::error_code ec;
  const auto actual = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("cannot read embedding file " + path.string() + ": " + ec.message());
  const std::uintmax_t expected = std::uintmax_t(expected_rows) * dim * 4;
  if (actual != expected)
    throw DataError("embedding file " + path.string() + " size mismatch: expected " + std::to_string(expected) +
                    " bytes (" + std::to_string(expected_rows) + " rows x " + std::to_string(dim) +
                    " dims x 4), got " + std::to_string(actual));

  std::vector<float> values(expected_rows * dim);
  auto in = io::open_input(path, std::ios::in | std::ios::binary);
  std::vector<std::uint32_t> raw(values.size());
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(expected));
  if (!in) throw DataError("short read from embedding file " + path.string());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    values[i] = std::bit_cast<float>(detail::to_little_endian(raw[i]));
    if (!std::isfinite(values[i]))
      throw DataError("non-finite embedding value in " + path.string() + " at (row " + std::to_string(i / dim) +
                      ", col " + std::to_string(i % dim) + ")");
  }
  return EmbeddingMatrix(expected_rows, dim, std::move(values));
}

inline void write_embeddings(std::ostream& out, const EmbeddingMatrix& m) {
  std::vector<std::uint32_t> raw(m.values().size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = detail::to_little_endian(std::bit_cast<std::uint32_t>(m.values()[i]));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
}

inline void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  io::write_atomically(path, [&](std::ostream& out) { write_embeddings(out, m); });
}

inline void require_same_dim(Vector u, Vector v) {
  if (u.size() != v.size())
    throw std::invalid_argument("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
}

inline double dot(Vector u, Vector v) {
  require_same_dim(u, v);
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) s += double(u[i]) * double(v[i]);
  return s;
}

inline double l2_norm(Vector u) {
  double s = 0;
  for (float x : u) s += double(x) * double(x);
  return std::sqrt(s);
}

inline double euclidean(Vector u, Vector v) {
  require_same_dim(u, v);
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = double(u[i]) - double(v[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

inline double cosine(Vector u, Vector v) {
  require_same_dim(u, v);
  const double nu = l2_norm(u), nv = l2_norm(v);
  if (nu == 0 || nv == 0) throw std::invalid_argument("cosine of a zero vector is undefined");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

struct Neighbor {
  std::size_t row = 0;
  double score = 0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct NeighborList {
  std::size_t query = 0;
  std::vector<Neighbor> neighbors;  // descending score, ties by ascending row
};

// Exact brute-force cosine k-nearest-neighbour search. Each query row of
// `queries` is scored against `index_rows` of `index` (all rows when empty).
inline std::vector<NeighborList> knn(const EmbeddingMatrix& queries, std::span<const std::size_t> query_rows,
                                     const EmbeddingMatrix& index, std::size_t k, unsigned workers = 1,
                                     std::span<const std::size_t> index_rows = {}) {
  if (k == 0) throw std::invalid_argument("knn: k must be at least 1");
  std::vector<std::size_t> all_rows;
  if (index_rows.empty()) {
    all_rows.resize(index.rows());
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    index_rows = all_rows;
  }
  if (index_rows.empty()) throw std::invalid_argument("knn: empty index matrix");
  if (queries.dim() != index.dim()) throw std::invalid_argument("knn: query/index dimension mismatch");

  std::vector<double> norms(index_rows.size());
  for (std::size_t j = 0; j < index_rows.size(); ++j) {
    norms[j] = l2_norm(index.row(index_rows[j]));
    if (norms[j] == 0) throw DataError("knn: zero vector at index row " + std::to_string(index_rows[j]));
  }

  std::vector<NeighborList> out(query_rows.size());
  parallel_for(query_rows.size(), workers, [&](std::size_t qi) {
    const Vector q = queries.row(query_rows[qi]);
    const double qn = l2_norm(q);
    if (qn == 0) throw DataError("knn: zero query vector at row " + std::to_string(query_rows[qi]));
    std::vector<Neighbor> scored(index_rows.size());
    for (std::size_t j = 0; j < index_rows.size(); ++j)
      scored[j] = {index_rows[j], std::clamp(dot(q, index.row(index_rows[j])) / (qn * norms[j]), -1.0, 1.0)};
    const std::size_t take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                        return a.score != b.score ? a.score > b.score : a.row < b.row;
                      });
    scored.resize(take);
    out[qi] = {query_rows[qi], std::move(scored)};
  });
  return out;
}

}  // namespace bitext
