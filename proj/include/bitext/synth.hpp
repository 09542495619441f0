#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bitext/corpus.hpp"
#include "bitext/embedstore.hpp"
#include "bitext/error.hpp"
#include "bitext/eval.hpp"
#include "bitext/io.hpp"

namespace bitext {

struct SynthConfig {
  std::size_t docs = 200;
  std::size_t sents_per_doc = 10;
  std::size_t dim = 64;
  double noise_sigma = 0.01;
  std::uint64_t seed = 42;
  std::size_t vocab_size = 400;
  double lexicon_coverage = 0.3;  // share of vocabulary pairs written to lexicon.tsv
};

// A comparable corpus pair with known ground truth. Target sentences are
// word-by-word "translations" of their source sentence (same token count)
// and their embeddings are the source embedding plus isotropic Gaussian
// noise. True document pairs share a publication day.
struct SynthFixture {
  std::string src_lang = "xa";
  std::string tgt_lang = "xb";
  std::string src_jsonl;
  std::string tgt_jsonl;
  EmbeddingMatrix src_emb;
  EmbeddingMatrix tgt_emb;
  std::vector<IdPair> gold_docs;
  std::vector<IdPair> gold_sents;
  std::vector<std::pair<std::string, std::string>> lexicon;
};

namespace detail {

inline std::vector<std::string> make_vocab(std::mt19937_64& rng, std::size_t n, std::string_view consonants,
                                           std::string_view vowels) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  std::uniform_int_distribution<std::size_t> syllables(2, 4), pick_c(0, consonants.size() - 1),
      pick_v(0, vowels.size() - 1);
  while (out.size() < n) {
    std::string w;
    for (std::size_t s = syllables(rng); s > 0; --s) {
      w += consonants[pick_c(rng)];
      w += vowels[pick_v(rng)];
    }
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

inline std::string sentence_text(const std::vector<std::size_t>& words, const std::vector<std::string>& vocab) {
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) text += ' ';
    text += vocab[words[i]];
  }
  text[0] = static_cast<char>(text[0] - 'a' + 'A');
  text += '.';
  return text;
}

}  // namespace detail

inline SynthFixture generate_synth(const SynthConfig& cfg) {
  if (cfg.docs == 0 || cfg.sents_per_doc == 0 || cfg.dim == 0 || cfg.noise_sigma < 0 || cfg.vocab_size == 0)
    throw UsageError("synth parameters must be positive");
  std::mt19937_64 rng(cfg.seed);
  SynthFixture fx;

  const auto src_vocab = detail::make_vocab(rng, cfg.vocab_size, "bcdfgklmnprst", "aeiou");
  const auto tgt_vocab = detail::make_vocab(rng, cfg.vocab_size, "hjqvwxyz", "aeiouy");

  std::vector<std::size_t> lex_order(cfg.vocab_size);
  std::iota(lex_order.begin(), lex_order.end(), std::size_t{0});
  std::shuffle(lex_order.begin(), lex_order.end(), rng);
  lex_order.resize(static_cast<std::size_t>(std::llround(cfg.lexicon_coverage * double(cfg.vocab_size))));
  std::sort(lex_order.begin(), lex_order.end());
  for (auto w : lex_order) fx.lexicon.emplace_back(src_vocab[w], tgt_vocab[w]);

  std::vector<std::size_t> tgt_number(cfg.docs);
  std::iota(tgt_number.begin(), tgt_number.end(), std::size_t{0});
  std::shuffle(tgt_number.begin(), tgt_number.end(), rng);

  const std::size_t days = std::max<std::size_t>(1, cfg.docs / 10);
  const Day first_day = Day{std::chrono::year{2021} / 1 / 1};
  auto doc_name = [](char prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%05zu", prefix, n);
    return std::string(buf);
  };

  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(4, 12), word(0, cfg.vocab_size - 1);
  const double scale = 1.0 / std::sqrt(double(cfg.dim));

  struct Sent {
    std::string text;
    std::vector<float> vec;
    std::size_t src_sid;
  };
  struct TgtDoc {
    std::string id;
    std::string date;
    std::vector<Sent> sents;
  };

  std::vector<float> src_values;
  std::vector<TgtDoc> tgt_docs(cfg.docs);
  std::ostringstream src_out;
  SentenceId next_src = 0;
  for (std::size_t d = 0; d < cfg.docs; ++d) {
    const std::string date = format_day(first_day + std::chrono::days{static_cast<int>(d % days)});
    nlohmann::json src_doc = {{"id", doc_name('s', d)}, {"lang", fx.src_lang}, {"date", date}};
    TgtDoc& tdoc = tgt_docs[tgt_number[d]];
    tdoc.id = doc_name('t', tgt_number[d]);
    tdoc.date = date;
    std::vector<std::vector<std::size_t>> doc_words(cfg.sents_per_doc);
    for (auto& words : doc_words) {
      words.resize(length(rng));
      for (auto& w : words) w = word(rng);
    }
    // Both sides must survive the default 50-character document filter.
    auto merged_chars = [&](const std::vector<std::string>& vocab) {
      std::size_t n = doc_words.size() - 1;
      for (const auto& words : doc_words) n += detail::sentence_text(words, vocab).size();
      return n;
    };
    while (merged_chars(src_vocab) < 50 || merged_chars(tgt_vocab) < 50) doc_words.back().push_back(word(rng));

    std::vector<std::string> sentences;
    for (const auto& words : doc_words) {
      sentences.push_back(detail::sentence_text(words, src_vocab));
      std::vector<float> vec(cfg.dim), noisy(cfg.dim);
      for (std::size_t c = 0; c < cfg.dim; ++c) {
        vec[c] = static_cast<float>(unit(rng) * scale);
        noisy[c] = static_cast<float>(vec[c] + unit(rng) * cfg.noise_sigma);
      }
      src_values.insert(src_values.end(), vec.begin(), vec.end());
      tdoc.sents.push_back({detail::sentence_text(words, tgt_vocab), std::move(noisy), next_src++});
    }
    std::shuffle(tdoc.sents.begin(), tdoc.sents.end(), rng);
    src_doc["sentences"] = sentences;
    src_out << src_doc.dump() << '\n';
    fx.gold_docs.emplace_back(src_doc["id"].get<std::string>(), tdoc.id);
  }

  std::vector<float> tgt_values;
  std::ostringstream tgt_out;
  SentenceId next_tgt = 0;
  for (auto& tdoc : tgt_docs) {
    nlohmann::json j = {{"id", tdoc.id}, {"lang", fx.tgt_lang}, {"date", tdoc.date}};
    std::vector<std::string> sentences;
    for (auto& s : tdoc.sents) {
      sentences.push_back(s.text);
      tgt_values.insert(tgt_values.end(), s.vec.begin(), s.vec.end());
      fx.gold_sents.emplace_back(std::to_string(s.src_sid), std::to_string(next_tgt++));
    }
    j["sentences"] = sentences;
    tgt_out << j.dump() << '\n';
  }
  std::sort(fx.gold_sents.begin(), fx.gold_sents.end(), [](const IdPair& a, const IdPair& b) {
    return std::stoull(a.first) < std::stoull(b.first);
  });

  fx.src_jsonl = src_out.str();
  fx.tgt_jsonl = tgt_out.str();
  fx.src_emb = EmbeddingMatrix(next_src, cfg.dim, std::move(src_values));
  fx.tgt_emb = EmbeddingMatrix(next_tgt, cfg.dim, std::move(tgt_values));
  return fx;
}

struct SynthPaths {
  std::filesystem::path src, tgt, src_emb, tgt_emb, gold_docs, gold_sents, lexicon;

  explicit SynthPaths(const std::filesystem::path& dir)
      : src(dir / "src.jsonl"),
        tgt(dir / "tgt.jsonl"),
        src_emb(dir / "src.emb"),
        tgt_emb(dir / "tgt.emb"),
        gold_docs(dir / "gold.doc.tsv"),
        gold_sents(dir / "gold.sent.tsv"),
        lexicon(dir / "lexicon.tsv") {}
};

inline SynthPaths write_synth(const SynthFixture& fx, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  SynthPaths paths(dir);
  io::write_atomically(paths.src, [&](std::ostream& o) { o << fx.src_jsonl; });
  io::write_atomically(paths.tgt, [&](std::ostream& o) { o << fx.tgt_jsonl; });
  save_embeddings(paths.src_emb, fx.src_emb);
  save_embeddings(paths.tgt_emb, fx.tgt_emb);
  auto write_pairs = [](const std::vector<IdPair>& pairs) {
    return [&pairs](std::ostream& o) {
      for (const auto& [a, b] : pairs) o << a << '\t' << b << '\n';
    };
  };
  io::write_atomically(paths.gold_docs, write_pairs(fx.gold_docs));
  io::write_atomically(paths.gold_sents, write_pairs(fx.gold_sents));
  io::write_atomically(paths.lexicon, write_pairs(fx.lexicon));
  return paths;
}

}  // namespace bitext
