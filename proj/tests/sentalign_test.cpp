#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "bitext/sentalign.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bitext {
namespace {

std::string doc_line(const std::string& id, const std::vector<std::string>& sents, const std::string& lang) {
  nlohmann::json j = {{"id", id}, {"lang", lang}, {"date", "2021-01-01"}, {"sentences", sents}};
  return j.dump() + "\n";
}

using PairSet = std::set<std::pair<SentenceId, SentenceId>>;

PairSet pair_set(const SentenceAlignment& a) {
  PairSet s;
  for (const auto& p : a.pairs) s.emplace(p.src_sid, p.tgt_sid);
  return s;
}

TEST(ForwardAlign, BaselineArgmax) {
  const auto s = testutil::matrix({{1, 0}});
  const auto t = testutil::matrix({{1, 0}, {0, 1}});
  const auto aln = forward_align({s}, {t});
  ASSERT_EQ(aln.pairs.size(), 1u);
  EXPECT_EQ(aln.pairs[0], (SentencePair{0, 0, 1.0}));
  EXPECT_THROW(forward_align({s}, {EmbeddingMatrix(0, 2, {})}), DataError);
}

TEST(ForwardAlign, RescoringPicksWeightedCandidate) {
  CandidateSet set{0, {{0, 0.80, 1.0, 0.80}, {1, 0.78, 1.5, 0.78 * 1.5}}};
  sort_candidates(set);
  EXPECT_EQ(set.candidates.front().tgt_sid, 1u);
  EXPECT_NEAR(set.candidates.front().score, 1.17, 1e-12);

  // Same situation end to end: three source tokens, one dictionary hit on
  // the second target, counter starting at zero.
  const auto src = testutil::corpus_from(doc_line("s", {"john went home"}, "en"));
  const auto tgt = testutil::corpus_from(doc_line("t", {"giya gedara", "jon giya"}, "si"));
  const float b = std::sqrt(1.0f - 0.78f * 0.78f);
  const auto es = testutil::matrix({{1, 0}});
  const auto et = testutil::matrix({{0.8f, 0.6f}, {0.78f, b}});
  BilingualLexicon names("en", "si");
  names.add({"john"}, {"jon"});
  SentAlignOptions opts;
  opts.weighting.names = &names;
  opts.weighting.options.count_init = 0;
  EXPECT_EQ(forward_align({es, &src}, {et, &tgt}).pairs[0].tgt_sid, 0u);
  const auto aln = forward_align({es, &src}, {et, &tgt}, opts);
  EXPECT_EQ(aln.pairs[0].tgt_sid, 1u);
  EXPECT_NEAR(aln.pairs[0].score, 0.78 * 1.5, 1e-6);
}

TEST(ForwardAlign, EmptyLexiconKeepsBaselineArgmax) {
  std::mt19937_64 rng(31);
  std::vector<std::string> s_sents, t_sents;
  for (int i = 0; i < 30; ++i) s_sents.push_back("w" + std::to_string(i) + " x y z");
  for (int i = 0; i < 40; ++i) t_sents.push_back("v" + std::to_string(i));
  const auto src = testutil::corpus_from(doc_line("s", s_sents, "en"));
  const auto tgt = testutil::corpus_from(doc_line("t", t_sents, "si"));
  const auto es = testutil::matrix(testutil::random_rows(rng, 30, 8));
  const auto et = testutil::matrix(testutil::random_rows(rng, 40, 8));
  const BilingualLexicon empty("en", "si");
  SentAlignOptions opts;
  opts.weighting.phrases = &empty;
  const auto base = forward_align({es, &src}, {et, &tgt});
  const auto lexed = forward_align({es, &src}, {et, &tgt}, opts);
  EXPECT_EQ(pair_set(base), pair_set(lexed));
  for (std::size_t i = 0; i < base.pairs.size(); ++i)
    EXPECT_NEAR(lexed.pairs[i].score, base.pairs[i].score * 4.0 / 3.0, 1e-12);
}

TEST(ForwardAlign, ChosenTargetIsAmongTopKCosine) {
  std::mt19937_64 rng(32);
  std::vector<std::string> s_sents, t_sents;
  const std::vector<std::string> sw = {"a", "b", "c", "d"}, tw = {"p", "q", "r", "s"};
  for (int i = 0; i < 25; ++i) s_sents.push_back(sw[rng() % 4] + " " + sw[rng() % 4] + " " + sw[rng() % 4]);
  for (int i = 0; i < 25; ++i) t_sents.push_back(tw[rng() % 4] + " " + tw[rng() % 4]);
  const auto src = testutil::corpus_from(doc_line("s", s_sents, "en"));
  const auto tgt = testutil::corpus_from(doc_line("t", t_sents, "si"));
  const auto es = testutil::matrix(testutil::random_rows(rng, 25, 6));
  const auto et = testutil::matrix(testutil::random_rows(rng, 25, 6));
  BilingualLexicon lex("en", "si");
  for (std::size_t i = 0; i < 4; ++i) lex.add({sw[i]}, {tw[i]});
  SentAlignOptions opts;
  opts.k = 3;
  opts.weighting.phrases = &lex;
  const auto aln = forward_align({es, &src}, {et, &tgt}, opts);
  ASSERT_EQ(aln.pairs.size(), 25u);
  std::vector<SentenceId> all(25);
  std::iota(all.begin(), all.end(), SentenceId{0});
  const auto top = knn(es, all, et, 3);
  for (const auto& p : aln.pairs) {
    bool found = false;
    for (const auto& nb : top[p.src_sid].neighbors) found = found || nb.row == p.tgt_sid;
    EXPECT_TRUE(found) << p.src_sid;
  }
  for (const auto& set : forward_candidates({es, &src}, {et, &tgt}, opts))
    for (const auto& c : set.candidates) EXPECT_NEAR(c.score, c.cosine * c.weight, 1e-12);
}

TEST(BackwardAlign, RoleSwap) {
  std::mt19937_64 rng(33);
  const auto rows = testutil::random_rows(rng, 7, 5);
  const auto m = testutil::matrix(rows);
  const auto fwd = forward_align({m}, {m});
  const auto bwd = backward_align({m}, {m});
  PairSet swapped;
  for (const auto& p : fwd.pairs) swapped.emplace(p.tgt_sid, p.src_sid);
  EXPECT_EQ(pair_set(bwd), swapped);

  const auto many = testutil::matrix(testutil::random_rows(rng, 9, 5));
  const auto one = testutil::matrix(testutil::random_rows(rng, 1, 5));
  EXPECT_EQ(backward_align({many}, {one}).pairs.size(), 1u);

  const auto other = testutil::matrix(testutil::random_rows(rng, 11, 5));
  const auto b = backward_align({many}, {other});
  const auto f = forward_align({other}, {many});
  ASSERT_EQ(b.pairs.size(), f.pairs.size());
  for (std::size_t i = 0; i < b.pairs.size(); ++i) {
    EXPECT_EQ(b.pairs[i].src_sid, f.pairs[i].tgt_sid);
    EXPECT_EQ(b.pairs[i].tgt_sid, f.pairs[i].src_sid);
    EXPECT_EQ(b.pairs[i].score, f.pairs[i].score);
  }
}

TEST(Intersect, Examples) {
  const SentenceAlignment f{Strategy::forward, {{0, 1, 0.5}}};
  EXPECT_EQ(intersect(f, {Strategy::backward, {{0, 1, 0.7}}}).pairs, (std::vector<SentencePair>{{0, 1, 0.5}}));
  EXPECT_TRUE(intersect(f, {Strategy::backward, {{0, 2, 0.7}}}).pairs.empty());
}

TEST(Intersect, SubsetOfBothDirections) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = testutil::matrix(testutil::random_rows(rng, 2 + rng() % 15, 4));
    const auto t = testutil::matrix(testutil::random_rows(rng, 2 + rng() % 15, 4));
    const auto f = forward_align({s}, {t}), b = backward_align({s}, {t});
    const auto i = intersect(f, b);
    EXPECT_EQ(f.pairs.size(), s.rows());
    EXPECT_EQ(b.pairs.size(), t.rows());
    const auto fs = pair_set(f), bs = pair_set(b);
    for (const auto& p : pair_set(i)) {
      EXPECT_TRUE(fs.count(p));
      EXPECT_TRUE(bs.count(p));
    }
    EXPECT_LE(i.pairs.size(), std::min(f.pairs.size(), b.pairs.size()));
  }
}

TEST(ForwardAlign, DocumentScopeLimitsCandidates) {
  const auto src = testutil::corpus_from(doc_line("s1", {"a"}, "en") + doc_line("s2", {"b"}, "en"));
  std::string t_jsonl = doc_line("t1", {"x"}, "si") + doc_line("t2", {"y"}, "si");
  const auto tgt = testutil::corpus_from(t_jsonl);
  const auto es = testutil::matrix({{1, 0}, {0, 1}});
  const auto et = testutil::matrix({{1, 0}, {0, 1}});
  const auto scope = scope_from_doc_pairs(src, tgt, {{"s1", "t2", 0.0}});
  SentAlignOptions opts;
  opts.scope = &scope;
  const auto aln = forward_align({es, &src}, {et, &tgt}, opts);
  ASSERT_EQ(aln.pairs.size(), 1u);
  EXPECT_EQ(aln.pairs[0], (SentencePair{0, 1, 0.0}));
}

TEST(MarginScore, SingletonPoolsGiveOne) {
  const auto s = testutil::matrix({{1, 2}});
  const auto t = testutil::matrix({{2, 0.5f}});
  EXPECT_NEAR(margin_score(0, 0, s, t, 1), 1.0, 1e-12);
  EXPECT_NEAR(margin_score(0, 0, s, t, 4), 1.0, 1e-12);  // k clamps to the pool size
}

TEST(MarginScore, HandBuiltTable) {
  const std::vector<std::vector<float>> S = {{1, 0, 0}, {1, 1, 0}, {0, 1, 1}};
  const std::vector<std::vector<float>> T = {{1, 0.2f, 0}, {0, 1, 0}, {0.3f, 0.3f, 1}};
  double c[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i][j] = oracle::cos_sim(S[i], T[j]);
  auto top2_mean = [](double a, double b, double d) {
    double v[3] = {a, b, d};
    std::sort(v, v + 3, std::greater<>());
    return (v[0] + v[1]) / 2.0;
  };
  const auto sm = testutil::matrix(S), tm = testutil::matrix(T);
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) {
      const double want = c[x][y] / (top2_mean(c[x][0], c[x][1], c[x][2]) / 2 + top2_mean(c[0][y], c[1][y], c[2][y]) / 2);
      EXPECT_NEAR(margin_score(x, y, sm, tm, 2), want, 1e-9) << x << "," << y;
    }
}

TEST(MarginScore, ScaleInvariant) {
  std::mt19937_64 rng(35);
  auto S = testutil::random_rows(rng, 6, 4), T = testutil::random_rows(rng, 5, 4);
  const auto s1 = testutil::matrix(S), t1 = testutil::matrix(T);
  for (auto& r : S)
    for (auto& x : r) x *= 2;
  for (auto& r : T)
    for (auto& x : r) x *= 2;
  const auto s2 = testutil::matrix(S), t2 = testutil::matrix(T);
  std::vector<SentencePair> pairs;
  for (SentenceId i = 0; i < 6; ++i)
    for (SentenceId j = 0; j < 5; ++j) pairs.push_back({i, j, 0});
  const auto a = margin_scores(pairs, s1, t1, 3), b = margin_scores(pairs, s2, t2, 3, 4);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].score, b[i].score, 1e-12);
}

TEST(MarginScore, ZeroDenominator) {
  const auto s = testutil::matrix({{1, 0}});
  const auto t = testutil::matrix({{0, 1}});
  EXPECT_THROW(margin_score(0, 0, s, t, 1), DataError);
}

TEST(ApplyThreshold, Examples) {
  const SentenceAlignment aln{Strategy::forward, {{0, 0, 0.9}, {1, 1, 0.5}}};
  EXPECT_EQ(apply_threshold(aln, -std::numeric_limits<double>::infinity()).pairs, aln.pairs);
  EXPECT_TRUE(apply_threshold(aln, 0.95).pairs.empty());
  EXPECT_EQ(apply_threshold(aln, 0.7).pairs, (std::vector<SentencePair>{{0, 0, 0.9}}));
}

TEST(SubsampleByBudget, Examples) {
  const std::vector<SentencePair> pairs{{0, 0, 0.1}, {1, 1, 0.9}, {2, 2, 0.5}, {3, 3, 0.7}};
  auto five = [](const SentencePair&) { return std::size_t{5}; };
  EXPECT_EQ(subsample_by_budget(pairs, 1000, five).size(), 4u);
  EXPECT_EQ(subsample_by_budget(pairs, 10, five), (std::vector<SentencePair>{{1, 1, 0.9}, {3, 3, 0.7}}));
  EXPECT_EQ(subsample_by_budget(pairs, 11, five).size(), 3u);
  EXPECT_EQ(subsample_by_budget(pairs, 1, five), (std::vector<SentencePair>{{1, 1, 0.9}}));
}

TEST(SubsampleByBudget, OutputIsPrefixOfRanking) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SentencePair> pairs;
    for (SentenceId i = 0; i < 20; ++i) pairs.push_back({i, 19 - i, double(rng() % 7) / 7.0});
    auto words = [](const SentencePair& p) { return 1 + p.tgt_sid % 4; };
    const std::size_t budget = 1 + rng() % 60;
    const auto kept = subsample_by_budget(pairs, budget, words);
    const auto ranked = subsample_by_budget(pairs, std::numeric_limits<std::size_t>::max(), words);
    ASSERT_LE(kept.size(), ranked.size());
    EXPECT_TRUE(std::equal(kept.begin(), kept.end(), ranked.begin()));
    std::size_t total = 0;
    for (const auto& p : kept) total += words(p);
    if (kept.size() < pairs.size()) EXPECT_GE(total, budget);
    if (!kept.empty()) EXPECT_LT(total - words(kept.back()), budget);
  }
}

TEST(SentencePairTsv, RoundTripWithText) {
  const auto src = testutil::corpus_from(doc_line("s", {"Hello there"}, "en"));
  const auto tgt = testutil::corpus_from(doc_line("t", {"Ayubowan"}, "si"));
  const auto dir = testutil::scratch_dir("sent_tsv");
  const std::vector<SentencePair> pairs{{0, 0, 0.987654321}};
  io::write_atomically(dir / "p.tsv", [&](std::ostream& o) { write_sentence_pairs(o, pairs, PairTexts{src, tgt}); });
  EXPECT_EQ(testutil::read_file(dir / "p.tsv"), "0\t0\t0.987654321\tHello there\tAyubowan\n");
  const auto rows = read_sentence_pairs(dir / "p.tsv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].pair, pairs[0]);
  EXPECT_EQ(rows[0].tgt_text.value_or(""), "Ayubowan");
}

}  // namespace
}  // namespace bitext
