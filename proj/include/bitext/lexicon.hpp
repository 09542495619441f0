#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bitext/corpus.hpp"
#include "bitext/error.hpp"
#include "bitext/io.hpp"

namespace bitext {

using Phrase = std::vector<std::string>;
using TokenSpan = std::span<const std::string>;

struct PhraseLess {
  using is_transparent = void;
  template <typename A, typename B>
  bool operator()(const A& a, const B& b) const {
    return std::lexicographical_compare(std::begin(a), std::end(a), std::begin(b), std::end(b));
  }
};

inline std::string join_phrase(TokenSpan phrase) {
  std::string out;
  for (std::size_t i = 0; i < phrase.size(); ++i) {
    if (i) out += ' ';
    out += phrase[i];
  }
  return out;
}

// Directed phrase table: source phrase -> ordered, duplicate-free list of
// target phrases. All phrases are 1..5 case-folded tokens.
class BilingualLexicon {
 public:
  static constexpr std::size_t kMaxPhraseTokens = 5;
  using Table = std::map<Phrase, std::vector<Phrase>, PhraseLess>;

  BilingualLexicon() = default;
  BilingualLexicon(std::string src_lang, std::string tgt_lang)
      : src_lang_(std::move(src_lang)), tgt_lang_(std::move(tgt_lang)) {}

  static bool valid_phrase(const Phrase& p) {
    return !p.empty() && p.size() <= kMaxPhraseTokens &&
           std::none_of(p.begin(), p.end(), [](const std::string& t) { return t.empty(); });
  }

  // Returns false when the translation was already present.
  bool add(Phrase src, Phrase tgt) {
    if (!valid_phrase(src) || !valid_phrase(tgt))
      throw std::invalid_argument("lexicon phrases must have 1-5 non-empty tokens");
    auto& targets = table_[std::move(src)];
    if (std::find(targets.begin(), targets.end(), tgt) != targets.end()) return false;
    targets.push_back(std::move(tgt));
    return true;
  }

  const std::vector<Phrase>* find(TokenSpan src) const {
    auto it = table_.find(src);
    return it == table_.end() ? nullptr : &it->second;
  }

  const Table& entries() const { return table_; }
  std::size_t size() const { return table_.size(); }
  bool empty() const { return table_.empty(); }
  std::size_t translation_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : table_) n += t.size();
    return n;
  }
  const std::string& src_lang() const { return src_lang_; }
  const std::string& tgt_lang() const { return tgt_lang_; }

  // Loader bookkeeping.
  std::size_t rows_ingested = 0;
  std::size_t rows_skipped = 0;

  BilingualLexicon inverted() const {
    BilingualLexicon out(tgt_lang_, src_lang_);
    for (const auto& [src, targets] : table_)
      for (const auto& tgt : targets) out.add(tgt, src);
    return out;
  }

  friend bool operator==(const BilingualLexicon& a, const BilingualLexicon& b) {
    return a.src_lang_ == b.src_lang_ && a.tgt_lang_ == b.tgt_lang_ && a.table_ == b.table_;
  }

 private:
  std::string src_lang_;
  std::string tgt_lang_;
  Table table_;
};

// Parallel phrase pairs of any length (glossaries).
struct PhrasePairs {
  std::string src_lang;
  std::string tgt_lang;
  std::vector<std::pair<Phrase, Phrase>> pairs;
};

namespace detail {

// Calls row(line_no, src_tokens, tgt_tokens) for every data line of a
// two-column TSV; blank and '#' lines are ignored.
template <typename RowFn>
void read_two_column_tsv(const std::filesystem::path& path, RowFn&& row) {
  auto in = io::open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = io::strip_cr(line);
    if (view.empty() || view.front() == '#') continue;
    const auto cols = io::split_tabs(view);
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (cols.size() != 2) throw DataError(where + "expected exactly one tab, found " + std::to_string(cols.size() - 1));
    auto src = tokenize(cols[0]);
    auto tgt = tokenize(cols[1]);
    if (src.empty() || tgt.empty()) throw DataError(where + "empty source or target side");
    row(std::move(src), std::move(tgt));
  }
}

}  // namespace detail

inline BilingualLexicon load_lexicon(const std::filesystem::path& path, std::string src_lang, std::string tgt_lang) {
  BilingualLexicon lex(std::move(src_lang), std::move(tgt_lang));
  detail::read_two_column_tsv(path, [&](Phrase src, Phrase tgt) {
    if (src.size() > BilingualLexicon::kMaxPhraseTokens || tgt.size() > BilingualLexicon::kMaxPhraseTokens) {
      ++lex.rows_skipped;
      return;
    }
    lex.add(std::move(src), std::move(tgt));
    ++lex.rows_ingested;
  });
  return lex;
}

inline PhrasePairs load_glossary(const std::filesystem::path& path, std::string src_lang, std::string tgt_lang) {
  PhrasePairs out{std::move(src_lang), std::move(tgt_lang), {}};
  detail::read_two_column_tsv(path, [&](Phrase src, Phrase tgt) { out.pairs.emplace_back(std::move(src), std::move(tgt)); });
  return out;
}

inline void write_lexicon(std::ostream& out, const BilingualLexicon& lex) {
  for (const auto& [src, targets] : lex.entries())
    for (const auto& tgt : targets) out << join_phrase(src) << '\t' << join_phrase(tgt) << '\n';
}

inline BilingualLexicon merge_lexicons(std::span<const BilingualLexicon> parts) {
  if (parts.empty()) return {};
  BilingualLexicon out(parts.front().src_lang(), parts.front().tgt_lang());
  for (const auto& part : parts) {
    if (part.src_lang() != out.src_lang() || part.tgt_lang() != out.tgt_lang())
      throw DataError("cannot merge lexicon " + part.src_lang() + "->" + part.tgt_lang() + " into " + out.src_lang() +
                      "->" + out.tgt_lang());
    for (const auto& [src, targets] : part.entries())
      for (const auto& tgt : targets) out.add(src, tgt);
    out.rows_ingested += part.rows_ingested;
    out.rows_skipped += part.rows_skipped;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Token matching

struct SpanMatch {
  std::size_t src_begin = 0, src_len = 0;
  std::size_t tgt_begin = 0, tgt_len = 0;
  friend bool operator==(const SpanMatch&, const SpanMatch&) = default;
};

struct MatchResult {
  std::size_t count = 1;  // count_init + matches.size()
  std::vector<SpanMatch> matches;
};

struct MatchOptions {
  std::size_t count_init = 1;
  bool consume_source = true;
  std::size_t max_len = BilingualLexicon::kMaxPhraseTokens;
};

namespace detail {

// Leftmost start of `needle` inside un-consumed positions of `hay`.
inline std::optional<std::size_t> find_free_span(TokenSpan hay, const std::vector<bool>& used, TokenSpan needle) {
  if (needle.empty() || needle.size() > hay.size()) return std::nullopt;
  for (std::size_t start = 0; start + needle.size() <= hay.size(); ++start) {
    bool ok = true;
    for (std::size_t j = 0; j < needle.size() && ok; ++j) ok = !used[start + j] && hay[start + j] == needle[j];
    if (ok) return start;
  }
  return std::nullopt;
}

}  // namespace detail

// Word-level matching: each source token occurrence that is a one-token key
// consumes the first of its one-token translations still present in the
// target, if any.
inline MatchResult count_matches_single(TokenSpan tokens_a, TokenSpan tokens_b, const BilingualLexicon& lex,
                                        std::size_t count_init = 1) {
  MatchResult result{count_init, {}};
  std::vector<bool> used(tokens_b.size(), false);
  for (std::size_t i = 0; i < tokens_a.size(); ++i) {
    const auto* targets = lex.find(tokens_a.subspan(i, 1));
    if (!targets) continue;
    for (const auto& v : *targets) {
      if (v.size() != 1) continue;
      if (auto at = detail::find_free_span(tokens_b, used, v)) {
        used[*at] = true;
        result.matches.push_back({i, 1, *at, 1});
        ++result.count;
        break;
      }
    }
  }
  return result;
}

// Phrase-level matching over contiguous source n-grams, longest first and
// left to right within a length. A hit consumes the target span (and, with
// consume_source, the source span).
inline MatchResult count_matches_phrase(TokenSpan tokens_a, TokenSpan tokens_b, const BilingualLexicon& lex,
                                        const MatchOptions& options = {}) {
  MatchResult result{options.count_init, {}};
  std::vector<bool> used_a(tokens_a.size(), false);
  std::vector<bool> used_b(tokens_b.size(), false);
  const std::size_t longest = std::min(options.max_len, tokens_a.size());
  for (std::size_t len = longest; len >= 1; --len) {
    for (std::size_t start = 0; start + len <= tokens_a.size(); ++start) {
      if (options.consume_source &&
          std::any_of(used_a.begin() + static_cast<std::ptrdiff_t>(start),
                      used_a.begin() + static_cast<std::ptrdiff_t>(start + len), [](bool u) { return u; }))
        continue;
      const auto* targets = lex.find(tokens_a.subspan(start, len));
      if (!targets) continue;
      for (const auto& v : *targets) {
        auto at = detail::find_free_span(tokens_b, used_b, v);
        if (!at) continue;
        std::fill_n(used_b.begin() + static_cast<std::ptrdiff_t>(*at), v.size(), true);
        if (options.consume_source) std::fill_n(used_a.begin() + static_cast<std::ptrdiff_t>(start), len, true);
        result.matches.push_back({start, len, *at, v.size()});
        ++result.count;
        break;
      }
    }
  }
  return result;
}

// Lexicon evidence for a sentence pair: word-level matching against a
// names list plus phrase-level matching against a phrase lexicon, summed
// on top of a single counter initialisation.
struct LexiconWeighting {
  const BilingualLexicon* names = nullptr;
  const BilingualLexicon* phrases = nullptr;
  MatchOptions options;

  bool active() const { return names != nullptr || phrases != nullptr; }

  std::size_t combined_count(TokenSpan tokens_a, TokenSpan tokens_b) const {
    std::size_t count = options.count_init;
    if (names) count += count_matches_single(tokens_a, tokens_b, *names, 0).count;
    if (phrases) {
      MatchOptions o = options;
      o.count_init = 0;
      count += count_matches_phrase(tokens_a, tokens_b, *phrases, o).count;
    }
    return count;
  }
};

namespace detail {
inline std::size_t clamp_count(std::size_t count, std::size_t len_a) { return std::min(count, len_a - 1); }
}  // namespace detail

// Distance multiplier (|s_A| - c) / |s_A| with c clamped to |s_A| - 1.
inline double doc_pair_weight(std::size_t count, std::size_t len_a) {
  if (len_a <= 1) return 1.0;
  const auto c = detail::clamp_count(count, len_a);
  return double(len_a - c) / double(len_a);
}

// Similarity multiplier |s_A| / (|s_A| - c), the inverse of doc_pair_weight.
inline double sent_pair_weight(std::size_t count, std::size_t len_a) {
  if (len_a <= 1) return 1.0;
  const auto c = detail::clamp_count(count, len_a);
  return double(len_a) / double(len_a - c);
}

// Strips dictionary word pairs out of each glossary pair; residues of 1..5
// tokens on both sides become new entries. Returns words plus the new
// entries.
inline BilingualLexicon build_improved_lexicon(const PhrasePairs& glossary, const BilingualLexicon& words) {
  if (glossary.src_lang != words.src_lang() || glossary.tgt_lang != words.tgt_lang())
    throw DataError("glossary direction " + glossary.src_lang + "->" + glossary.tgt_lang +
                    " does not match dictionary direction " + words.src_lang() + "->" + words.tgt_lang());
  BilingualLexicon out = merge_lexicons(std::span(&words, 1));
  for (const auto& [src, tgt] : glossary.pairs) {
    std::vector<bool> drop_src(src.size(), false), drop_tgt(tgt.size(), false);
    for (std::size_t i = 0; i < src.size(); ++i) {
      const auto* targets = words.find(TokenSpan(src).subspan(i, 1));
      if (!targets) continue;
      for (const auto& v : *targets) {
        if (v.size() != 1) continue;
        if (auto at = detail::find_free_span(tgt, drop_tgt, v)) {
          drop_tgt[*at] = true;
          drop_src[i] = true;
          break;
        }
      }
    }
    Phrase rest_src, rest_tgt;
    for (std::size_t i = 0; i < src.size(); ++i)
      if (!drop_src[i]) rest_src.push_back(src[i]);
    for (std::size_t j = 0; j < tgt.size(); ++j)
      if (!drop_tgt[j]) rest_tgt.push_back(tgt[j]);
    if (BilingualLexicon::valid_phrase(rest_src) && BilingualLexicon::valid_phrase(rest_tgt))
      out.add(std::move(rest_src), std::move(rest_tgt));
  }
  return out;
}

}  // namespace bitext
