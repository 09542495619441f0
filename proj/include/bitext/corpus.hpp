#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "json.hpp"

#include "bitext/error.hpp"
#include "bitext/io.hpp"

namespace bitext {

using SentenceId = std::size_t;
using Day = std::chrono::sys_days;

struct Document {
  std::string id;
  std::string lang;
  Day date;
  std::optional<std::string> url;
  std::vector<SentenceId> sentence_ids;
};

struct SentenceRecord {
  SentenceId sid = 0;
  std::string doc_id;
  std::size_t position = 0;
  std::string text;
  std::vector<std::string> tokens;
};

struct Corpus {
  std::string lang;
  std::vector<Document> documents;
  std::vector<SentenceRecord> sentences;
  // Document indices keyed by publication day.
  std::map<Day, std::vector<std::size_t>> by_date;
  std::unordered_map<std::string, std::size_t> index_of;

  const Document& document(std::string_view id) const {
    auto it = index_of.find(std::string(id));
    if (it == index_of.end()) throw DataError("unknown document id: " + std::string(id));
    return documents[it->second];
  }
  std::size_t sentence_count() const { return sentences.size(); }
};

namespace detail {

inline bool is_strippable(UChar32 c) { return u_ispunct(c) != 0; }

inline std::size_t code_points(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

inline std::string trim(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  int32_t begin = 0;
  int32_t end = u.length();
  while (begin < end && u_isUWhiteSpace(u.char32At(begin))) begin = u.moveIndex32(begin, 1);
  while (end > begin) {
    const int32_t prev = u.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(u.char32At(prev))) break;
    end = prev;
  }
  std::string out;
  u.tempSubStringBetween(begin, end).toUTF8String(out);
  return out;
}

}  // namespace detail

// Splits on Unicode whitespace, strips leading/trailing punctuation from each
// piece, drops empty pieces and applies full Unicode case folding.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  const icu::UnicodeString u =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const int32_t n = u.length();
  int32_t i = 0;
  while (i < n) {
    while (i < n && u_isUWhiteSpace(u.char32At(i))) i = u.moveIndex32(i, 1);
    int32_t start = i;
    while (i < n && !u_isUWhiteSpace(u.char32At(i))) i = u.moveIndex32(i, 1);
    int32_t end = i;
    while (start < end && detail::is_strippable(u.char32At(start))) start = u.moveIndex32(start, 1);
    while (end > start) {
      const int32_t prev = u.moveIndex32(end, -1);
      if (!detail::is_strippable(u.char32At(prev))) break;
      end = prev;
    }
    if (start == end) continue;
    icu::UnicodeString piece(u, start, end - start);
    piece.foldCase(U_FOLD_CASE_DEFAULT);
    std::string out;
    piece.toUTF8String(out);
    tokens.push_back(std::move(out));
  }
  return tokens;
}

// Strict "YYYY-MM-DD".
inline std::optional<Day> parse_day(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t from, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = from; i < from + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return Day{ymd};
}

inline std::string format_day(Day day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

struct CorpusOptions {
  // Documents whose merged text (sentences joined by newlines) has fewer
  // code points than this are dropped.
  std::size_t min_chars = 50;
};

// Builds a corpus from in-memory JSON-lines text. `lang` may be empty, in
// which case the first document's language is adopted. `origin` names the
// source in error messages.
inline Corpus parse_corpus(std::istream& in, std::string lang, const CorpusOptions& options = {},
                           const std::string& origin = "<stream>") {
  Corpus corpus;
  corpus.lang = std::move(lang);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw DataError(origin + ":" + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) fail("record is not a JSON object");
    auto string_field = [&](const char* key) -> std::string {
      auto it = rec.find(key);
      if (it == rec.end() || !it->is_string()) fail(std::string("missing or non-string field '") + key + "'");
      return it->get<std::string>();
    };

    Document doc;
    doc.id = string_field("id");
    doc.lang = string_field("lang");
    const std::string date = string_field("date");
    auto day = parse_day(date);
    if (!day) fail("unparseable date '" + date + "'");
    doc.date = *day;
    if (auto it = rec.find("url"); it != rec.end() && !it->is_null()) {
      if (!it->is_string()) fail("field 'url' must be a string");
      doc.url = it->get<std::string>();
    }
    if (corpus.lang.empty()) corpus.lang = doc.lang;
    if (doc.lang != corpus.lang) fail("document language '" + doc.lang + "' differs from corpus language '" + corpus.lang + "'");

    std::vector<std::string> raw;
    if (auto it = rec.find("sentences"); it != rec.end()) {
      if (!it->is_array()) fail("field 'sentences' must be an array");
      for (const auto& s : *it) {
        if (!s.is_string()) fail("non-string element in 'sentences'");
        raw.push_back(s.get<std::string>());
      }
    } else if (auto jt = rec.find("text"); jt != rec.end()) {
      if (!jt->is_string()) fail("field 'text' must be a string");
      const std::string text = jt->get<std::string>();
      std::size_t start = 0;
      for (;;) {
        const std::size_t nl = text.find('\n', start);
        raw.push_back(text.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
        if (nl == std::string::npos) break;
        start = nl + 1;
      }
    } else {
      fail("record has neither 'sentences' nor 'text'");
    }

    if (corpus.index_of.count(doc.id) != 0) fail("duplicate document id '" + doc.id + "'");

    // Keep sentences that survive trimming and still yield at least one token.
    std::vector<SentenceRecord> kept;
    std::size_t merged_chars = 0;
    for (const auto& s : raw) {
      std::string text = detail::trim(s);
      if (text.empty()) continue;
      auto tokens = tokenize(text);
      if (tokens.empty()) continue;
      if (!kept.empty()) ++merged_chars;
      merged_chars += detail::code_points(text);
      SentenceRecord rec_out;
      rec_out.text = std::move(text);
      rec_out.tokens = std::move(tokens);
      kept.push_back(std::move(rec_out));
    }
    if (kept.empty() || merged_chars < options.min_chars) continue;

    const std::size_t doc_index = corpus.documents.size();
    for (std::size_t pos = 0; pos < kept.size(); ++pos) {
      auto& s = kept[pos];
      s.sid = corpus.sentences.size();
      s.doc_id = doc.id;
      s.position = pos;
      doc.sentence_ids.push_back(s.sid);
      corpus.sentences.push_back(std::move(s));
    }
    corpus.index_of.emplace(doc.id, doc_index);
    corpus.by_date[doc.date].push_back(doc_index);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path, std::string lang = {},
                          const CorpusOptions& options = {}) {
  auto in = io::open_input(path);
  return parse_corpus(in, std::move(lang), options, path.string());
}

struct DateBucket {
  Day day;  // source-side day the bucket was built around
  std::vector<std::size_t> src_docs;
  std::vector<std::size_t> tgt_docs;
};

// One bucket per source publication day d, holding the source documents of
// day d and the target documents published within [d - window, d + window].
// Buckets with an empty side are omitted.
inline std::vector<DateBucket> date_buckets(const Corpus& src, const Corpus& tgt, unsigned window_days) {
  std::vector<DateBucket> buckets;
  const std::chrono::days window{window_days};
  for (const auto& [day, src_docs] : src.by_date) {
    DateBucket bucket{day, src_docs, {}};
    for (auto it = tgt.by_date.lower_bound(day - window); it != tgt.by_date.end() && it->first <= day + window; ++it)
      bucket.tgt_docs.insert(bucket.tgt_docs.end(), it->second.begin(), it->second.end());
    if (!bucket.tgt_docs.empty()) buckets.push_back(std::move(bucket));
  }
  return buckets;
}

}  // namespace bitext
