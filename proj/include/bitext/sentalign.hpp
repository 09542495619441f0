#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "bitext/corpus.hpp"
#include "bitext/docalign.hpp"
#include "bitext/embedstore.hpp"
#include "bitext/error.hpp"
#include "bitext/io.hpp"
#include "bitext/lexicon.hpp"
#include "bitext/parallel.hpp"

namespace bitext {

enum class Strategy { forward, backward, intersection };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::forward: return "forward";
    case Strategy::backward: return "backward";
    case Strategy::intersection: return "intersection";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::forward, Strategy::backward, Strategy::intersection})
    if (to_string(s) == name) return s;
  throw UsageError("unknown strategy: " + std::string(name));
}

struct ScoredCandidate {
  SentenceId tgt_sid = 0;
  double cosine = 0;
  double weight = 1;
  double score = 0;  // cosine * weight
};

struct CandidateSet {
  SentenceId src_sid = 0;
  std::vector<ScoredCandidate> candidates;  // descending score, ties by ascending tgt_sid
};

struct SentencePair {
  SentenceId src_sid = 0;
  SentenceId tgt_sid = 0;
  double score = 0;
  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

struct SentenceAlignment {
  Strategy strategy = Strategy::forward;
  std::vector<SentencePair> pairs;
};

// Restricts comparisons to groups of (source sids, target sids), e.g. the
// sentences of aligned document pairs. Without a scope the whole pools are
// compared.
struct SentenceScope {
  std::vector<std::pair<std::vector<SentenceId>, std::vector<SentenceId>>> groups;

  SentenceScope swapped() const {
    SentenceScope out;
    for (const auto& [s, t] : groups) out.groups.emplace_back(t, s);
    return out;
  }
};

inline SentenceScope scope_from_doc_pairs(const Corpus& src, const Corpus& tgt, const std::vector<DocPair>& pairs) {
  SentenceScope scope;
  for (const auto& p : pairs)
    scope.groups.emplace_back(src.document(p.src_id).sentence_ids, tgt.document(p.tgt_id).sentence_ids);
  return scope;
}

struct SentenceSide {
  const EmbeddingMatrix& emb;
  const Corpus* corpus = nullptr;  // needed for lexicon rescoring
};

struct SentAlignOptions {
  std::size_t k = 4;
  LexiconWeighting weighting;  // direction must match the source side
  unsigned workers = 1;
  const SentenceScope* scope = nullptr;
};

// Re-ranks a candidate list in place by its current scores.
inline void sort_candidates(CandidateSet& set) {
  std::sort(set.candidates.begin(), set.candidates.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    return a.score != b.score ? a.score > b.score : a.tgt_sid < b.tgt_sid;
  });
}

// Top-k cosine candidates per source sentence, rescored with the lexicon
// weight when one is attached (weight 1 otherwise).
inline std::vector<CandidateSet> forward_candidates(SentenceSide src, SentenceSide tgt, const SentAlignOptions& options) {
  if (options.k == 0) throw UsageError("k must be at least 1");
  if (tgt.emb.empty()) throw DataError("cannot align against an empty target side");
  if (options.weighting.active() && (src.corpus == nullptr || tgt.corpus == nullptr))
    throw std::invalid_argument("lexicon rescoring needs the sentence texts of both sides");

  SentenceScope whole;
  const SentenceScope* scope = options.scope;
  if (scope == nullptr) {
    std::vector<SentenceId> all_src(src.emb.rows()), all_tgt(tgt.emb.rows());
    std::iota(all_src.begin(), all_src.end(), SentenceId{0});
    std::iota(all_tgt.begin(), all_tgt.end(), SentenceId{0});
    whole.groups.emplace_back(std::move(all_src), std::move(all_tgt));
    scope = &whole;
  }

  std::vector<CandidateSet> out;
  for (const auto& [src_rows, tgt_rows] : scope->groups) {
    if (src_rows.empty() || tgt_rows.empty()) continue;
    auto lists = knn(src.emb, src_rows, tgt.emb, options.k, options.workers, tgt_rows);
    const std::size_t base = out.size();
    out.resize(base + lists.size());
    parallel_for(lists.size(), options.workers, [&](std::size_t q) {
      CandidateSet set{lists[q].query, {}};
      for (const auto& nb : lists[q].neighbors) {
        double w = 1.0;
        if (options.weighting.active()) {
          const auto& a = src.corpus->sentences[set.src_sid].tokens;
          const auto& b = tgt.corpus->sentences[nb.row].tokens;
          w = sent_pair_weight(options.weighting.combined_count(a, b), a.size());
        }
        set.candidates.push_back({nb.row, nb.score, w, nb.score * w});
      }
      sort_candidates(set);
      out[base + q] = std::move(set);
    });
  }
  std::sort(out.begin(), out.end(), [](const CandidateSet& a, const CandidateSet& b) { return a.src_sid < b.src_sid; });
  return out;
}

// Each source sentence is aligned to its best-scoring target.
inline SentenceAlignment forward_align(SentenceSide src, SentenceSide tgt, const SentAlignOptions& options = {}) {
  SentenceAlignment out{Strategy::forward, {}};
  for (const auto& set : forward_candidates(src, tgt, options)) {
    if (set.candidates.empty()) continue;
    const auto& best = set.candidates.front();
    out.pairs.push_back({set.src_sid, best.tgt_sid, best.score});
  }
  return out;
}

// Each target sentence is aligned to its best-scoring source. `options`
// (lexicon and scope) must already be oriented target -> source; pairs
// are reported as (src_sid, tgt_sid) of the original orientation.
inline SentenceAlignment backward_align(SentenceSide src, SentenceSide tgt, const SentAlignOptions& options = {}) {
  auto reversed = forward_align(tgt, src, options);
  SentenceAlignment out{Strategy::backward, {}};
  out.pairs.reserve(reversed.pairs.size());
  for (const auto& p : reversed.pairs) out.pairs.push_back({p.tgt_sid, p.src_sid, p.score});
  return out;
}

// Pairs present in both directions; scores come from the forward side.
inline SentenceAlignment intersect(const SentenceAlignment& fwd, const SentenceAlignment& bwd) {
  std::set<std::pair<SentenceId, SentenceId>> backward_pairs;
  for (const auto& p : bwd.pairs) backward_pairs.emplace(p.src_sid, p.tgt_sid);
  SentenceAlignment out{Strategy::intersection, {}};
  for (const auto& p : fwd.pairs)
    if (backward_pairs.count({p.src_sid, p.tgt_sid})) out.pairs.push_back(p);
  return out;
}

inline SentenceAlignment apply_threshold(const SentenceAlignment& aln, double threshold) {
  SentenceAlignment out{aln.strategy, {}};
  std::copy_if(aln.pairs.begin(), aln.pairs.end(), std::back_inserter(out.pairs),
               [&](const SentencePair& p) { return p.score >= threshold; });
  return out;
}

// Ratio margin: cos(x, y) divided by the mean of the average cosine of x
// to its k nearest targets and of y to its k nearest sources. Neighbour
// averages are cached per sentence.
class MarginScorer {
 public:
  MarginScorer(const EmbeddingMatrix& src, const EmbeddingMatrix& tgt, std::size_t k, unsigned workers = 1)
      : src_(src), tgt_(tgt), k_(k), workers_(workers) {
    if (k == 0) throw UsageError("margin k must be at least 1");
    if (src.empty() || tgt.empty()) throw DataError("margin scoring needs non-empty source and target pools");
  }

  // Precomputes neighbourhood averages for every sid referenced by pairs.
  void prepare(const std::vector<SentencePair>& pairs) {
    std::set<SentenceId> need_src, need_tgt;
    for (const auto& p : pairs) {
      if (!src_avg_.count(p.src_sid)) need_src.insert(p.src_sid);
      if (!tgt_avg_.count(p.tgt_sid)) need_tgt.insert(p.tgt_sid);
    }
    fill(need_src, src_, tgt_, src_avg_);
    fill(need_tgt, tgt_, src_, tgt_avg_);
  }

  double score(SentenceId s, SentenceId t) {
    if (!src_avg_.count(s) || !tgt_avg_.count(t)) prepare({{s, t, 0.0}});
    const double denom = src_avg_.at(s) / 2.0 + tgt_avg_.at(t) / 2.0;
    if (denom == 0) throw DataError("zero margin denominator for pair (" + std::to_string(s) + ", " + std::to_string(t) + ")");
    return cosine(src_.row(s), tgt_.row(t)) / denom;
  }

 private:
  void fill(const std::set<SentenceId>& rows, const EmbeddingMatrix& queries, const EmbeddingMatrix& index,
            std::unordered_map<SentenceId, double>& cache) const {
    if (rows.empty()) return;
    const std::vector<SentenceId> list(rows.begin(), rows.end());
    for (auto r : list)
      if (r >= queries.rows()) throw DataError("sentence id " + std::to_string(r) + " out of range for embeddings");
    for (const auto& nl : knn(queries, list, index, k_, workers_)) {
      double sum = 0;
      for (const auto& nb : nl.neighbors) sum += nb.score;
      cache[nl.query] = sum / double(nl.neighbors.size());
    }
  }

  const EmbeddingMatrix& src_;
  const EmbeddingMatrix& tgt_;
  std::size_t k_;
  unsigned workers_;
  std::unordered_map<SentenceId, double> src_avg_, tgt_avg_;
};

inline double margin_score(SentenceId s, SentenceId t, const EmbeddingMatrix& src, const EmbeddingMatrix& tgt,
                           std::size_t k = 4) {
  MarginScorer scorer(src, tgt, k);
  return scorer.score(s, t);
}

inline std::vector<SentencePair> margin_scores(const std::vector<SentencePair>& pairs, const EmbeddingMatrix& src,
                                               const EmbeddingMatrix& tgt, std::size_t k = 4, unsigned workers = 1) {
  MarginScorer scorer(src, tgt, k, workers);
  scorer.prepare(pairs);
  std::vector<SentencePair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.src_sid, p.tgt_sid, scorer.score(p.src_sid, p.tgt_sid)});
  return out;
}

// Highest-scoring pairs until the target side reaches budget_words tokens;
// the pair that crosses the budget is kept.
template <typename TargetWords>
std::vector<SentencePair> subsample_by_budget(std::vector<SentencePair> pairs, std::size_t budget_words,
                                              TargetWords&& target_words) {
  std::sort(pairs.begin(), pairs.end(), [](const SentencePair& a, const SentencePair& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.src_sid, a.tgt_sid) < std::tie(b.src_sid, b.tgt_sid);
  });
  std::size_t words = 0, take = 0;
  while (take < pairs.size() && words < budget_words) words += target_words(pairs[take++]);
  pairs.resize(take);
  return pairs;
}

struct PairTexts {
  const Corpus& src;
  const Corpus& tgt;
};

inline void write_sentence_pairs(std::ostream& out, const std::vector<SentencePair>& pairs,
                                 std::optional<PairTexts> texts = std::nullopt) {
  for (const auto& p : pairs) {
    out << p.src_sid << '\t' << p.tgt_sid << '\t' << io::format_score(p.score);
    if (texts) out << '\t' << texts->src.sentences.at(p.src_sid).text << '\t' << texts->tgt.sentences.at(p.tgt_sid).text;
    out << '\n';
  }
}

struct SentencePairRow {
  SentencePair pair;
  std::optional<std::string> src_text, tgt_text;
};

inline std::vector<SentencePairRow> read_sentence_pairs(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::vector<SentencePairRow> rows;
  std::string line;
  std::size_t line_no = 0;
  auto parse_sid = [&](std::string_view s) -> SentenceId {
    SentenceId v = 0;
    if (s.empty()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty sentence id");
    for (char c : s) {
      if (c < '0' || c > '9')
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad sentence id '" + std::string(s) + "'");
      v = v * 10 + SentenceId(c - '0');
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = io::strip_cr(line);
    if (view.empty()) continue;
    const auto cols = io::split_tabs(view);
    if (cols.size() != 2 && cols.size() != 3 && cols.size() != 5)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 2, 3 or 5 columns");
    SentencePairRow row;
    row.pair.src_sid = parse_sid(cols[0]);
    row.pair.tgt_sid = parse_sid(cols[1]);
    if (cols.size() >= 3) {
      try {
        row.pair.score = std::stod(std::string(cols[2]));
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad score '" + std::string(cols[2]) + "'");
      }
    }
    if (cols.size() == 5) {
      row.src_text = std::string(cols[3]);
      row.tgt_text = std::string(cols[4]);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bitext
