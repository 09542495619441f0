#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "bitext/corpus.hpp"
#include "bitext/docalign.hpp"
#include "bitext/embedstore.hpp"
#include "bitext/error.hpp"
#include "bitext/eval.hpp"
#include "bitext/io.hpp"
#include "bitext/lexicon.hpp"
#include "bitext/sentalign.hpp"
#include "bitext/synth.hpp"

// Subcommand implementations shared by the command line tool and the
// integration tests. Each run_* function writes its artifacts atomically and
// returns the one-line JSON summary.
namespace bitext::pipeline {

using Path = std::filesystem::path;
using Json = nlohmann::json;

struct CorpusInputs {
  Path src, tgt, src_emb, tgt_emb;
  std::size_t dim = 1024;
  std::size_t min_chars = 50;
  bool normalize = false;
};

struct LexiconInputs {
  std::vector<Path> lexicons;  // phrase-level matching, merged
  std::vector<Path> names;     // word-level matching, merged
  std::size_t count_init = 1;
  bool consume_source = true;
};

struct DocCommand {
  CorpusInputs inputs;
  LexiconInputs lex;
  WeightScheme scheme = WeightScheme::slen;
  unsigned window_days = 0;
  unsigned workers = 1;
  Path out;
  std::optional<Path> gold;
};

struct SentCommand {
  CorpusInputs inputs;
  LexiconInputs lex;
  Strategy strategy = Strategy::forward;
  std::size_t k = 4;
  double threshold = -std::numeric_limits<double>::infinity();
  std::optional<Path> doc_pairs;
  bool emit_text = false;
  unsigned workers = 1;
  Path out;
  std::optional<Path> gold;
};

struct BuildLexiconCommand {
  Path glossary, words, out;
  std::string src_lang = "src", tgt_lang = "tgt";
};

struct MarginCommand {
  Path pairs, src_emb, tgt_emb;
  std::size_t dim = 1024;
  std::size_t budget = 1'000'000;
  std::size_t k = 4;
  std::optional<Path> src, tgt;  // corpora; tgt supplies target word counts
  std::size_t min_chars = 50;
  bool normalize = false;
  unsigned workers = 1;
  Path out;
};

struct EvalCommand {
  EvalTask task = EvalTask::document;
  Path pred, gold;
};

struct SynthCommand {
  SynthConfig config;
  Path out_dir;
};

namespace detail {

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct LoadedCorpora {
  Corpus src, tgt;
  EmbeddingMatrix src_emb, tgt_emb;
};

inline LoadedCorpora load_inputs(const CorpusInputs& in) {
  LoadedCorpora out;
  const CorpusOptions opts{in.min_chars};
  out.src = load_corpus(in.src, {}, opts);
  out.tgt = load_corpus(in.tgt, {}, opts);
  out.src_emb = load_embeddings(in.src_emb, in.dim, out.src.sentence_count());
  out.tgt_emb = load_embeddings(in.tgt_emb, in.dim, out.tgt.sentence_count());
  if (in.normalize) {
    out.src_emb.normalize_rows();
    out.tgt_emb.normalize_rows();
  }
  return out;
}

inline std::optional<BilingualLexicon> load_merged(const std::vector<Path>& paths, const std::string& src_lang,
                                                   const std::string& tgt_lang) {
  if (paths.empty()) return std::nullopt;
  std::vector<BilingualLexicon> parts;
  for (const auto& p : paths) parts.push_back(load_lexicon(p, src_lang, tgt_lang));
  return merge_lexicons(parts);
}

struct Lexicons {
  std::optional<BilingualLexicon> phrases, names;

  LexiconWeighting weighting(const LexiconInputs& in) const {
    LexiconWeighting w;
    w.phrases = phrases ? &*phrases : nullptr;
    w.names = names ? &*names : nullptr;
    w.options.count_init = in.count_init;
    w.options.consume_source = in.consume_source;
    return w;
  }

  Json summary() const {
    Json j = Json::object();
    if (phrases) j["lexicon_entries"] = phrases->size();
    if (names) j["names_entries"] = names->size();
    return j;
  }
};

inline Lexicons load_lexicons(const LexiconInputs& in, const std::string& src_lang, const std::string& tgt_lang) {
  return {load_merged(in.lexicons, src_lang, tgt_lang), load_merged(in.names, src_lang, tgt_lang)};
}

inline Json report_json(const EvalReport& r) {
  return {{"task", to_string(r.task)},
          {"gold", r.gold_size},
          {"predicted", r.predicted_size},
          {"hits", r.hits},
          {"recall", r.recall}};
}

}  // namespace detail

inline Json run_doc(const DocCommand& cmd) {
  detail::Stopwatch clock;
  auto data = detail::load_inputs(cmd.inputs);
  auto lexicons = detail::load_lexicons(cmd.lex, data.src.lang, data.tgt.lang);

  DocAlignOptions options;
  options.scheme = cmd.scheme;
  options.window_days = cmd.window_days;
  options.weighting = lexicons.weighting(cmd.lex);
  options.workers = cmd.workers;
  const auto aln = align_documents(data.src, data.tgt, data.src_emb, data.tgt_emb, options);
  io::write_atomically(cmd.out, [&](std::ostream& o) { write_document_alignment(o, aln.pairs); });

  Json summary = {{"command", "doc"},
                  {"scheme", to_string(cmd.scheme)},
                  {"src_documents", data.src.documents.size()},
                  {"tgt_documents", data.tgt.documents.size()},
                  {"candidates", aln.candidates},
                  {"pairs", aln.pairs.size()}};
  summary.update(lexicons.summary());
  if (cmd.gold) {
    std::set<IdPair> predicted;
    for (const auto& p : aln.pairs) predicted.emplace(p.src_id, p.tgt_id);
    summary["eval"] = detail::report_json(recall(predicted, load_gold(*cmd.gold, EvalTask::document), EvalTask::document));
  }
  summary["elapsed_ms"] = clock.elapsed_ms();
  return summary;
}

inline Json run_sent(const SentCommand& cmd) {
  detail::Stopwatch clock;
  auto data = detail::load_inputs(cmd.inputs);
  auto lexicons = detail::load_lexicons(cmd.lex, data.src.lang, data.tgt.lang);
  // The backward pass searches from target to source.
  detail::Lexicons reverse;
  if (lexicons.phrases) reverse.phrases = lexicons.phrases->inverted();
  if (lexicons.names) reverse.names = lexicons.names->inverted();

  std::optional<SentenceScope> scope, reverse_scope;
  if (cmd.doc_pairs) {
    scope = scope_from_doc_pairs(data.src, data.tgt, read_document_alignment(*cmd.doc_pairs));
    reverse_scope = scope->swapped();
  }

  const SentenceSide src{data.src_emb, &data.src};
  const SentenceSide tgt{data.tgt_emb, &data.tgt};
  SentAlignOptions fwd_opts{cmd.k, lexicons.weighting(cmd.lex), cmd.workers, scope ? &*scope : nullptr};
  SentAlignOptions bwd_opts{cmd.k, reverse.weighting(cmd.lex), cmd.workers, reverse_scope ? &*reverse_scope : nullptr};

  SentenceAlignment aln;
  switch (cmd.strategy) {
    case Strategy::forward: aln = forward_align(src, tgt, fwd_opts); break;
    case Strategy::backward: aln = backward_align(src, tgt, bwd_opts); break;
    case Strategy::intersection:
      aln = intersect(forward_align(src, tgt, fwd_opts), backward_align(src, tgt, bwd_opts));
      break;
  }
  const std::size_t before = aln.pairs.size();
  aln = apply_threshold(aln, cmd.threshold);

  io::write_atomically(cmd.out, [&](std::ostream& o) {
    write_sentence_pairs(o, aln.pairs, cmd.emit_text ? std::optional(PairTexts{data.src, data.tgt}) : std::nullopt);
  });

  Json summary = {{"command", "sent"},
                  {"strategy", to_string(cmd.strategy)},
                  {"k", cmd.k},
                  {"src_sentences", data.src.sentence_count()},
                  {"tgt_sentences", data.tgt.sentence_count()},
                  {"pairs_before_threshold", before},
                  {"pairs", aln.pairs.size()}};
  summary.update(lexicons.summary());
  if (cmd.gold) {
    std::set<IdPair> predicted;
    for (const auto& p : aln.pairs) predicted.emplace(std::to_string(p.src_sid), std::to_string(p.tgt_sid));
    summary["eval"] = detail::report_json(recall(predicted, load_gold(*cmd.gold, EvalTask::sentence), EvalTask::sentence));
  }
  summary["elapsed_ms"] = clock.elapsed_ms();
  return summary;
}

inline Json run_build_lexicon(const BuildLexiconCommand& cmd) {
  detail::Stopwatch clock;
  const auto glossary = load_glossary(cmd.glossary, cmd.src_lang, cmd.tgt_lang);
  const auto words = load_lexicon(cmd.words, cmd.src_lang, cmd.tgt_lang);
  const auto improved = build_improved_lexicon(glossary, words);
  io::write_atomically(cmd.out, [&](std::ostream& o) { write_lexicon(o, improved); });
  return {{"command", "build-lexicon"},
          {"glossary_pairs", glossary.pairs.size()},
          {"dictionary_entries", words.size()},
          {"entries", improved.size()},
          {"translations", improved.translation_count()},
          {"added_translations", improved.translation_count() - words.translation_count()},
          {"elapsed_ms", clock.elapsed_ms()}};
}

// Row count is inferred from the file size when no corpus pins it.
inline EmbeddingMatrix load_embeddings_any(const Path& path, std::size_t dim, std::optional<std::size_t> rows) {
  if (rows) return load_embeddings(path, dim, *rows);
  if (dim == 0) throw UsageError("embedding dimension must be positive");
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(path, ec);
  if (ec) throw DataError("cannot read embedding file " + path.string() + ": " + ec.message());
  if (bytes % (dim * 4) != 0)
    throw DataError("embedding file " + path.string() + " size " + std::to_string(bytes) +
                    " is not a multiple of dim x 4 = " + std::to_string(dim * 4));
  return load_embeddings(path, dim, bytes / (dim * 4));
}

inline Json run_margin_subsample(const MarginCommand& cmd) {
  detail::Stopwatch clock;
  const CorpusOptions opts{cmd.min_chars};
  std::optional<Corpus> src, tgt;
  if (cmd.src) src = load_corpus(*cmd.src, {}, opts);
  if (cmd.tgt) tgt = load_corpus(*cmd.tgt, {}, opts);
  auto src_emb = load_embeddings_any(cmd.src_emb, cmd.dim, src ? std::optional(src->sentence_count()) : std::nullopt);
  auto tgt_emb = load_embeddings_any(cmd.tgt_emb, cmd.dim, tgt ? std::optional(tgt->sentence_count()) : std::nullopt);
  if (cmd.normalize) {
    src_emb.normalize_rows();
    tgt_emb.normalize_rows();
  }

  const auto rows = read_sentence_pairs(cmd.pairs);
  std::vector<SentencePair> pairs;
  std::unordered_map<SentenceId, std::size_t> words_of_tgt;
  for (const auto& row : rows) {
    pairs.push_back(row.pair);
    if (tgt) {
      if (row.pair.tgt_sid >= tgt->sentence_count())
        throw DataError("target sentence id " + std::to_string(row.pair.tgt_sid) + " out of range");
      words_of_tgt[row.pair.tgt_sid] = tgt->sentences[row.pair.tgt_sid].tokens.size();
    } else if (row.tgt_text) {
      words_of_tgt[row.pair.tgt_sid] = tokenize(*row.tgt_text).size();
    } else {
      throw UsageError("margin-subsample needs --tgt or a pairs file with sentence text columns");
    }
  }

  auto scored = margin_scores(pairs, src_emb, tgt_emb, cmd.k, cmd.workers);
  auto kept = subsample_by_budget(std::move(scored), cmd.budget,
                                  [&](const SentencePair& p) { return words_of_tgt.at(p.tgt_sid); });
  std::size_t words = 0;
  for (const auto& p : kept) words += words_of_tgt.at(p.tgt_sid);
  io::write_atomically(cmd.out, [&](std::ostream& o) { write_sentence_pairs(o, kept); });
  return {{"command", "margin-subsample"},
          {"input_pairs", pairs.size()},
          {"pairs", kept.size()},
          {"target_words", words},
          {"budget", cmd.budget},
          {"elapsed_ms", clock.elapsed_ms()}};
}

inline Json run_eval(const EvalCommand& cmd) {
  detail::Stopwatch clock;
  const auto gold = load_gold(cmd.gold, cmd.task);
  const auto predicted = load_id_pairs(cmd.pred, cmd.task);
  Json summary = detail::report_json(recall(predicted, gold, cmd.task));
  summary["command"] = "eval";
  summary["elapsed_ms"] = clock.elapsed_ms();
  return summary;
}

inline Json run_synth(const SynthCommand& cmd) {
  detail::Stopwatch clock;
  const auto fixture = generate_synth(cmd.config);
  const auto paths = write_synth(fixture, cmd.out_dir);
  return {{"command", "synth"},
          {"documents", cmd.config.docs},
          {"src_sentences", fixture.src_emb.rows()},
          {"tgt_sentences", fixture.tgt_emb.rows()},
          {"dim", cmd.config.dim},
          {"sigma", cmd.config.noise_sigma},
          {"seed", cmd.config.seed},
          {"out_dir", cmd.out_dir.string()},
          {"elapsed_ms", clock.elapsed_ms()}};
}

}  // namespace bitext::pipeline
