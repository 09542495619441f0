#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bitext/corpus.hpp"
#include "bitext/embedstore.hpp"
#include "bitext/error.hpp"
#include "bitext/io.hpp"
#include "bitext/lexicon.hpp"
#include "bitext/parallel.hpp"

namespace bitext {

enum class WeightScheme { relfreq, slen, idf, slidf };

inline std::string_view to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::relfreq: return "relfreq";
    case WeightScheme::slen: return "slen";
    case WeightScheme::idf: return "idf";
    case WeightScheme::slidf: return "slidf";
  }
  return "?";
}

inline WeightScheme parse_scheme(std::string_view name) {
  for (auto s : {WeightScheme::relfreq, WeightScheme::slen, WeightScheme::idf, WeightScheme::slidf})
    if (to_string(s) == name) return s;
  throw UsageError("unknown weighting scheme: " + std::string(name));
}

// Document frequencies of exact sentence strings.
struct IdfStats {
  std::size_t documents = 0;
  std::unordered_map<std::string, std::size_t> df;

  std::size_t df_of(const std::string& text) const {
    auto it = df.find(text);
    return it == df.end() ? 0 : it->second;
  }
  // 1 + ln((N + 1) / (1 + df)); unseen sentences get df = 0.
  double raw_weight(const std::string& text) const {
    return 1.0 + std::log(double(documents + 1) / double(1 + df_of(text)));
  }
};

inline IdfStats idf_statistics(const Corpus& corpus) {
  IdfStats stats;
  stats.documents = corpus.documents.size();
  for (const auto& doc : corpus.documents) {
    std::unordered_set<std::string_view> seen;
    for (auto sid : doc.sentence_ids) {
      const auto& text = corpus.sentences[sid].text;
      if (seen.insert(text).second) ++stats.df[text];
    }
  }
  return stats;
}

// Probability masses over a document's distinct sentences. Duplicate
// sentence texts pool into the first occurrence's sid.
struct WeightVector {
  std::string doc_id;
  WeightScheme scheme = WeightScheme::relfreq;
  std::vector<SentenceId> sids;
  std::vector<double> masses;
};

inline WeightVector sentence_masses(const Document& doc, const Corpus& corpus, WeightScheme scheme,
                                    const IdfStats* idf = nullptr) {
  if ((scheme == WeightScheme::idf || scheme == WeightScheme::slidf) && idf == nullptr)
    throw std::invalid_argument("sentence_masses: scheme " + std::string(to_string(scheme)) + " needs IDF statistics");

  WeightVector out{doc.id, scheme, {}, {}};
  std::vector<std::size_t> counts;
  std::unordered_map<std::string_view, std::size_t> slot;
  for (auto sid : doc.sentence_ids) {
    const auto& text = corpus.sentences[sid].text;
    auto [it, fresh] = slot.emplace(text, out.sids.size());
    if (fresh) {
      out.sids.push_back(sid);
      counts.push_back(0);
    }
    ++counts[it->second];
  }

  std::vector<double> raw(out.sids.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& s = corpus.sentences[out.sids[i]];
    const double count = double(counts[i]);
    const double length = double(s.tokens.size());
    switch (scheme) {
      case WeightScheme::relfreq: raw[i] = count; break;
      case WeightScheme::slen: raw[i] = count * length; break;
      case WeightScheme::idf: raw[i] = idf->raw_weight(s.text); break;
      case WeightScheme::slidf: raw[i] = count * length * idf->raw_weight(s.text); break;
    }
  }
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(total > 0))
    throw DataError("document '" + doc.id + "' has zero total weight under scheme " + std::string(to_string(scheme)));
  out.masses.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.masses[i] = raw[i] / total;
  return out;
}

struct FlowStep {
  SentenceId src_sid = 0;
  SentenceId tgt_sid = 0;
  double flow = 0;
  double delta = 0;
  double weight = 1;
};

struct DocDistance {
  std::string src_id;
  std::string tgt_id;
  double distance = 0;
  std::vector<FlowStep> trace;
};

struct UnitPairWeight {
  double operator()(SentenceId, SentenceId) const { return 1.0; }
};

// Greedy approximation of the transport distance between two weighted
// bags of sentence embeddings: visit sentence pairs by ascending Euclidean
// distance and move as much mass as both ends still hold.
template <typename PairWeight = UnitPairWeight>
DocDistance greedy_movers_distance(const WeightVector& src, const WeightVector& tgt, const EmbeddingMatrix& src_emb,
                                   const EmbeddingMatrix& tgt_emb, PairWeight&& pair_weight = {}) {
  const double src_total = std::accumulate(src.masses.begin(), src.masses.end(), 0.0);
  const double tgt_total = std::accumulate(tgt.masses.begin(), tgt.masses.end(), 0.0);
  if (std::abs(src_total - tgt_total) > 1e-6)
    throw std::invalid_argument("greedy_movers_distance: mass mismatch between '" + src.doc_id + "' and '" +
                                tgt.doc_id + "'");

  struct Edge {
    double delta;
    std::size_t i, j;
  };
  std::vector<Edge> edges;
  edges.reserve(src.sids.size() * tgt.sids.size());
  for (std::size_t i = 0; i < src.sids.size(); ++i)
    for (std::size_t j = 0; j < tgt.sids.size(); ++j)
      edges.push_back({euclidean(src_emb.row(src.sids[i]), tgt_emb.row(tgt.sids[j])), i, j});
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    if (a.delta != b.delta) return a.delta < b.delta;
    return std::tie(src.sids[a.i], tgt.sids[a.j]) < std::tie(src.sids[b.i], tgt.sids[b.j]);
  });

  std::vector<double> left_src = src.masses, left_tgt = tgt.masses;
  std::size_t open_src = left_src.size(), open_tgt = left_tgt.size();
  DocDistance out{src.doc_id, tgt.doc_id, 0.0, {}};
  for (const auto& e : edges) {
    if (open_src == 0 || open_tgt == 0) break;
    const double flow = std::min(left_src[e.i], left_tgt[e.j]);
    if (flow <= 0) continue;
    const double w = pair_weight(src.sids[e.i], tgt.sids[e.j]);
    out.distance += flow * e.delta * w;
    out.trace.push_back({src.sids[e.i], tgt.sids[e.j], flow, e.delta, w});
    // Whichever side was the minimum is now exhausted exactly.
    if (left_src[e.i] <= left_tgt[e.j]) {
      left_tgt[e.j] -= flow;
      left_src[e.i] = 0;
      --open_src;
      if (left_tgt[e.j] <= 0) left_tgt[e.j] = 0, --open_tgt;
    } else {
      left_src[e.i] -= flow;
      left_tgt[e.j] = 0;
      --open_tgt;
    }
  }
  return out;
}

struct DocPair {
  std::string src_id;
  std::string tgt_id;
  double distance = 0;
  friend bool operator==(const DocPair&, const DocPair&) = default;
};

struct DocumentAlignment {
  std::vector<DocPair> pairs;  // ascending distance, ties by (src_id, tgt_id)
  std::size_t candidates = 0;  // document pairs scored
};

// Greedy one-to-one extraction: accept candidates in ascending
// (distance, src_id, tgt_id) order while both sides are unmatched.
inline std::vector<DocPair> competitive_match(std::vector<DocPair> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const DocPair& a, const DocPair& b) {
    return std::tie(a.distance, a.src_id, a.tgt_id) < std::tie(b.distance, b.src_id, b.tgt_id);
  });
  std::unordered_set<std::string> used_src, used_tgt;
  std::vector<DocPair> out;
  for (auto& c : candidates) {
    if (used_src.count(c.src_id) || used_tgt.count(c.tgt_id)) continue;
    used_src.insert(c.src_id);
    used_tgt.insert(c.tgt_id);
    out.push_back(std::move(c));
  }
  return out;
}

struct DocAlignOptions {
  WeightScheme scheme = WeightScheme::slen;
  unsigned window_days = 0;
  LexiconWeighting weighting;  // inactive unless a lexicon is attached
  unsigned workers = 1;
};

// Lexicon weight of a (source, target) sentence pair for the transport cost.
struct LexiconPairWeight {
  const Corpus& src;
  const Corpus& tgt;
  const LexiconWeighting& weighting;

  double operator()(SentenceId s, SentenceId t) const {
    const auto& a = src.sentences[s].tokens;
    const auto& b = tgt.sentences[t].tokens;
    return doc_pair_weight(weighting.combined_count(a, b), a.size());
  }
};

inline DocumentAlignment align_documents(const Corpus& src, const Corpus& tgt, const EmbeddingMatrix& src_emb,
                                         const EmbeddingMatrix& tgt_emb, const DocAlignOptions& options = {}) {
  if (src_emb.rows() != src.sentence_count())
    throw DataError("source embeddings have " + std::to_string(src_emb.rows()) + " rows but the corpus has " +
                    std::to_string(src.sentence_count()) + " sentences");
  if (tgt_emb.rows() != tgt.sentence_count())
    throw DataError("target embeddings have " + std::to_string(tgt_emb.rows()) + " rows but the corpus has " +
                    std::to_string(tgt.sentence_count()) + " sentences");
  if (src_emb.dim() != tgt_emb.dim()) throw DataError("source and target embedding dimensions differ");

  const bool needs_idf = options.scheme == WeightScheme::idf || options.scheme == WeightScheme::slidf;
  IdfStats src_idf, tgt_idf;
  if (needs_idf) {
    src_idf = idf_statistics(src);
    tgt_idf = idf_statistics(tgt);
  }

  // Candidate pairs, deduplicated across overlapping windows.
  std::set<std::pair<std::size_t, std::size_t>> unique;
  for (const auto& bucket : date_buckets(src, tgt, options.window_days))
    for (auto s : bucket.src_docs)
      for (auto t : bucket.tgt_docs) unique.emplace(s, t);
  const std::vector<std::pair<std::size_t, std::size_t>> jobs(unique.begin(), unique.end());

  std::map<std::size_t, WeightVector> src_masses, tgt_masses;
  for (const auto& [s, t] : jobs) {
    if (!src_masses.count(s))
      src_masses.emplace(s, sentence_masses(src.documents[s], src, options.scheme, needs_idf ? &src_idf : nullptr));
    if (!tgt_masses.count(t))
      tgt_masses.emplace(t, sentence_masses(tgt.documents[t], tgt, options.scheme, needs_idf ? &tgt_idf : nullptr));
  }

  std::vector<DocPair> candidates(jobs.size());
  parallel_for(jobs.size(), options.workers, [&](std::size_t n) {
    const auto& sm = src_masses.at(jobs[n].first);
    const auto& tm = tgt_masses.at(jobs[n].second);
    DocDistance d = options.weighting.active()
                        ? greedy_movers_distance(sm, tm, src_emb, tgt_emb, LexiconPairWeight{src, tgt, options.weighting})
                        : greedy_movers_distance(sm, tm, src_emb, tgt_emb);
    candidates[n] = {sm.doc_id, tm.doc_id, d.distance};
  });

  DocumentAlignment out;
  out.candidates = candidates.size();
  out.pairs = competitive_match(std::move(candidates));
  return out;
}

inline void write_document_alignment(std::ostream& out, const std::vector<DocPair>& pairs) {
  for (const auto& p : pairs) out << p.src_id << '\t' << p.tgt_id << '\t' << io::format_score(p.distance) << '\n';
}

inline std::vector<DocPair> read_document_alignment(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::vector<DocPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = io::strip_cr(line);
    if (view.empty()) continue;
    const auto cols = io::split_tabs(view);
    if (cols.size() < 2) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected src_id<TAB>tgt_id");
    DocPair p{std::string(cols[0]), std::string(cols[1]), 0.0};
    if (cols.size() >= 3) {
      try {
        p.distance = std::stod(std::string(cols[2]));
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad distance '" + std::string(cols[2]) + "'");
      }
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace bitext
