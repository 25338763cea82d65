#include <gtest/gtest.h>

#include <map>

#include "ctxgate/metrics.hpp"
#include "support.hpp"

namespace ctxgate {
namespace {

std::vector<Label> random_labels(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<int> u(0, kLabelVocab - 1);
  std::vector<Label> out(n);
  for (Label& l : out) l = label_from_index(u(rng));
  return out;
}

TEST(ScorePredictions, PerfectPredictor) {
  Rng rng(1);
  const auto gold = random_labels(500, rng);
  const ClassificationScores s = score_predictions(gold, gold);
  EXPECT_DOUBLE_EQ(s.accuracy, 100.0);
  EXPECT_DOUBLE_EQ(s.macro_f1, 100.0);
  for (double f : s.f1) EXPECT_DOUBLE_EQ(f, 100.0);
}

TEST(ScorePredictions, ConstantMajorityPredictor) {
  // 60% L4, the rest spread over L1..L3; always predict L4.
  std::vector<Label> gold;
  for (int k = 0; k < 600; ++k) gold.push_back(Label::kL4);
  for (int k = 0; k < 400; ++k) gold.push_back(label_from_index(k % 3));
  const std::vector<Label> pred(gold.size(), Label::kL4);
  const ClassificationScores s = score_predictions(gold, pred);
  EXPECT_NEAR(s.accuracy, 60.0, 1e-12);
  EXPECT_NEAR(s.f1[3], 75.0, 1e-12);
  EXPECT_EQ(s.f1[0], 0.0);
  EXPECT_NEAR(s.macro_f1, 18.75, 1e-12);
}

TEST(ScorePredictions, AbsentClassCountsAsZero) {
  const std::vector<Label> gold = {Label::kL1, Label::kL1, Label::kL2};
  const std::vector<Label> pred = {Label::kL1, Label::kL2, Label::kL2};
  const ClassificationScores s = score_predictions(gold, pred);
  // L1: p=1 r=.5 -> 2/3; L2: p=.5 r=1 -> 2/3; L3, L4 absent -> 0.
  EXPECT_NEAR(s.f1[0], 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.f1[1], 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.macro_f1, 100.0 / 3.0, 1e-12);
}

TEST(ScorePredictions, MatchesIndependentRecount) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial * 7;
    const auto gold = random_labels(n, rng);
    const auto pred = random_labels(n, rng);
    const ClassificationScores s = score_predictions(gold, pred);

    std::map<std::pair<int, int>, std::size_t> counts;
    for (std::size_t i = 0; i < n; ++i) ++counts[{index(gold[i]), index(pred[i])}];
    std::size_t total = 0, diag = 0;
    double macro = 0.0;
    for (int c = 0; c < kLabelVocab; ++c) {
      std::size_t row = 0, col = 0;
      for (int j = 0; j < kLabelVocab; ++j) {
        EXPECT_EQ(s.confusion[c][j], counts[std::pair(c, j)]);
        row += counts[std::pair(c, j)];
        col += counts[std::pair(j, c)];
        total += counts[std::pair(c, j)];
      }
      const std::size_t tp = counts[std::pair(c, c)];
      diag += tp;
      const double f1 = row + col == 0 ? 0.0 : 200.0 * tp / static_cast<double>(row + col);
      EXPECT_NEAR(s.f1[c], f1, 1e-9);
      macro += f1 / kLabelVocab;
    }
    EXPECT_EQ(s.total, n);
    EXPECT_EQ(total, n);
    EXPECT_NEAR(s.accuracy, 100.0 * diag / static_cast<double>(n), 1e-9);
    EXPECT_NEAR(s.macro_f1, macro, 1e-9);
  }
}

TEST(ScorePredictions, RowSumsAreGoldCounts) {
  Rng rng(3);
  const auto gold = random_labels(1000, rng);
  const auto pred = random_labels(1000, rng);
  const ClassificationScores s = score_predictions(gold, pred);
  for (int c = 0; c < kLabelVocab; ++c) {
    std::size_t row = 0;
    for (std::size_t v : s.confusion[c]) row += v;
    EXPECT_EQ(row, static_cast<std::size_t>(
                       std::count(gold.begin(), gold.end(), label_from_index(c))));
  }
  const ClassificationScores again = scores_from_confusion(s.confusion);
  EXPECT_EQ(again.macro_f1, s.macro_f1);
  EXPECT_EQ(again.accuracy, s.accuracy);
}

TEST(ScorePredictions, RejectsLengthMismatch) {
  const std::vector<Label> a = {Label::kL1}, b;
  EXPECT_THROW(score_predictions(a, b), ConfigError);
}

TEST(Evaluate, ReadOnlyAndConsistent) {
  const Policy p = Policy::random(testing::tiny_arch(), 4);
  const auto data = generate_dataset(testing::tiny_task(400, 5));
  const std::vector<double> before(p.params().begin(), p.params().end());
  const MetricsReport a = evaluate(p, data, PromptVariant::kWithContext);
  const MetricsReport b = evaluate(p, data, PromptVariant::kWithContext);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), p.params().begin()));
  EXPECT_EQ(a.overall.confusion, b.overall.confusion);
  EXPECT_EQ(a.overall.total, data.size());
  EXPECT_EQ(a.usage.decisions, data.size());

  // Category slices partition the overall confusion matrix.
  ConfusionMatrix sum{};
  for (const auto& c : a.by_category)
    for (int i = 0; i < kLabelVocab; ++i)
      for (int j = 0; j < kLabelVocab; ++j) sum[i][j] += c.confusion[i][j];
  EXPECT_EQ(sum, a.overall.confusion);

  // Greedy decoding agrees with the reported predictions.
  std::vector<Label> gold, pred;
  std::size_t adopted = 0;
  for (const Instance& i : data) {
    Rng unused(0);
    const TokenPair t = sample_sequence(p, build_observation(i, PromptVariant::kWithContext),
                                        SamplingSpec::Greedy(), unused)
                            .tokens;
    gold.push_back(i.gold);
    pred.push_back(t.label);
    adopted += t.usage == UsageToken::kAdopt;
  }
  EXPECT_EQ(score_predictions(gold, pred).confusion, a.overall.confusion);
  EXPECT_EQ(a.usage.adopted, adopted);
}

TEST(UsageStats, Rates) {
  UsageStats u;
  u.decisions = 10;
  u.adopted = 4;
  u.by_utility = {5, 3, 2};
  u.adopted_by_utility = {3, 1, 0};
  EXPECT_DOUBLE_EQ(u.adopt_rate(), 40.0);
  EXPECT_DOUBLE_EQ(u.adopt_rate(Utility::kAdopt), 60.0);
  EXPECT_DOUBLE_EQ(u.adopt_rate(Utility::kIgnore), 0.0);
  EXPECT_EQ(UsageStats{}.adopt_rate(), 0.0);
}

}  // namespace
}  // namespace ctxgate
