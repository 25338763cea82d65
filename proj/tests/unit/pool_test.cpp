#include <gtest/gtest.h>

#include <set>

#include "ctxgate/config.hpp"
#include "ctxgate/pool.hpp"
#include "ctxgate/suite.hpp"
#include "support.hpp"

namespace ctxgate {
namespace {

std::vector<ScoreRecord> constant_scores(std::span<const Instance> data, double conf) {
  std::vector<ScoreRecord> out;
  for (const Instance& i : data) out.push_back({i.id, i.gold, conf, i.gold});
  return out;
}

TEST(BuildRlPool, AllConfidentGivesEmptyPoolError) {
  const auto data = generate_dataset(testing::tiny_task(200, 1));
  const auto scores = constant_scores(data, 0.9);
  try {
    build_rl_pool(scores, data, {});
    FAIL() << "expected EmptyPoolError";
  } catch (const EmptyPoolError& e) {
    EXPECT_EQ(e.histogram()[9], 200u);
    EXPECT_NE(std::string(e.what()).find("0.7"), std::string::npos);
  }
}

TEST(BuildRlPool, ThresholdOneWithoutCapsKeepsEverything) {
  const auto data = generate_dataset(testing::tiny_task(300, 2));
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.25, 0.999);
  std::vector<ScoreRecord> scores;
  for (const Instance& i : data) scores.push_back({i.id, i.gold, u(rng), i.gold});
  PoolConfig cfg;
  cfg.threshold = 1.0;
  cfg.cap_ratio.reset();
  const auto pool = build_rl_pool(scores, data, cfg);
  ASSERT_EQ(pool.size(), data.size());
  for (std::size_t k = 0; k < data.size(); ++k) EXPECT_EQ(pool[k].id, data[k].id);
}

TEST(BuildRlPool, MissingScoreIsAnError) {
  const auto data = generate_dataset(testing::tiny_task(10, 4));
  auto scores = constant_scores(data, 0.5);
  scores.pop_back();
  EXPECT_THROW(build_rl_pool(scores, data, {}), ConfigError);
}

// Random scores with a category-skewed sub-threshold set.
struct SkewedCase {
  std::vector<Instance> data;
  std::vector<ScoreRecord> scores;
};

SkewedCase skewed_case(std::uint64_t seed) {
  SkewedCase c;
  c.data = generate_dataset(testing::tiny_task(2000, seed));
  Rng rng(seed + 1);
  std::uniform_real_distribution<double> u(0.25, 1.0);
  for (const Instance& i : c.data) {
    // Category NEGATION is far more often uncertain than the others.
    double conf = u(rng);
    if (i.category == Category::kNegation) conf = 0.25 + 0.5 * (conf - 0.25);
    c.scores.push_back({i.id, i.gold, conf, i.gold});
  }
  return c;
}

TEST(BuildRlPool, PropertiesOnRandomInstances) {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const SkewedCase c = skewed_case(seed);
    PoolConfig cfg;
    cfg.seed = seed;
    const auto pool = build_rl_pool(c.scores, c.data, cfg);

    std::map<std::int64_t, double> conf;
    for (const auto& s : c.scores) conf[s.id] = s.confidence;
    std::set<std::int64_t> ids;
    std::array<std::size_t, kNumCategories> per_cat{};
    for (const Instance& i : pool) {
      EXPECT_TRUE(conf.count(i.id));
      EXPECT_LT(conf[i.id], cfg.threshold);
      EXPECT_TRUE(ids.insert(i.id).second) << "duplicate id " << i.id;
      ++per_cat[index(i.category)];
    }
    EXPECT_TRUE(std::is_sorted(pool.begin(), pool.end(),
                               [](const Instance& a, const Instance& b) { return a.id < b.id; }));
    const auto [lo, hi] = std::minmax_element(per_cat.begin(), per_cat.end());
    ASSERT_GT(*lo, 0u);
    EXPECT_LE(static_cast<double>(*hi), 2.0 * static_cast<double>(*lo)) << "seed " << seed;

    // Every tier and utility state that survived the threshold is covered.
    std::set<int> tiers_in, tiers_out, utils_in, utils_out;
    for (const Instance& i : c.data)
      if (conf[i.id] < cfg.threshold) {
        tiers_in.insert(index(i.gold));
        utils_in.insert(index(i.utility));
      }
    for (const Instance& i : pool) {
      tiers_out.insert(index(i.gold));
      utils_out.insert(index(i.utility));
    }
    EXPECT_EQ(tiers_in, tiers_out);
    EXPECT_EQ(utils_in, utils_out);
  }
}

TEST(BuildRlPool, AbsoluteCategoryCap) {
  const SkewedCase c = skewed_case(40);
  PoolConfig cfg;
  cfg.category_cap = 25;
  cfg.cap_ratio.reset();
  const auto pool = build_rl_pool(c.scores, c.data, cfg);
  std::array<std::size_t, kNumCategories> per_cat{};
  for (const Instance& i : pool) ++per_cat[index(i.category)];
  // Coverage repair may add a handful of instances past the cap.
  for (std::size_t n : per_cat) EXPECT_LE(n, 25u + kLabelVocab + kNumUtilities);
}

TEST(UncertaintyReport, CalibratedScoresTrackConfidence) {
  Rng rng(50);
  std::uniform_real_distribution<double> u(0.25, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<ScoreRecord> scores;
  for (int k = 0; k < 200000; ++k) {
    const double conf = u(rng);
    const bool correct = std::bernoulli_distribution(conf)(rng);
    scores.push_back({k, correct ? Label::kL4 : Label::kL1, conf, Label::kL4});
  }
  const UncertaintyReport r = uncertainty_report(scores);
  for (const auto& b : r.buckets) {
    if (b.count < 1000) continue;
    // Bucket counts exceed 2e4, so the binomial sd is below 0.0035.
    EXPECT_NEAR(b.error_rate, 1.0 - b.mean_confidence, 0.015);
  }
  EXPECT_TRUE(r.monotone);
}

TEST(UncertaintyReport, SingleOccupiedBucket) {
  std::vector<ScoreRecord> scores;
  for (int k = 0; k < 10; ++k)
    scores.push_back({k, Label::kL2, 0.55, k % 2 ? Label::kL2 : Label::kL3});
  const UncertaintyReport r = uncertainty_report(scores);
  EXPECT_EQ(r.occupied(), 1u);
  EXPECT_EQ(r.buckets[5].count, 10u);
  EXPECT_DOUBLE_EQ(r.buckets[5].error_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.global_error_rate, 0.5);
  EXPECT_EQ(r.total, 10u);
}

TEST(ConfidenceHistogram, DecileEdges) {
  std::vector<ScoreRecord> scores = {{0, Label::kL1, 0.3, Label::kL1},
                                     {1, Label::kL1, 0.6999, Label::kL1},
                                     {2, Label::kL1, 0.7, Label::kL1},
                                     {3, Label::kL1, 1.0, Label::kL1}};
  const auto h = confidence_histogram(scores);
  EXPECT_EQ(h[3], 1u);
  EXPECT_EQ(h[6], 1u);
  EXPECT_EQ(h[7], 1u);
  EXPECT_EQ(h[9], 1u);
}

class DeskPool : public ::testing::Test {
 protected:
  void SetUp() override {
    PipelineConfig base;
    config = with_stage_seeds(base, 21);
    splits = make_splits(config.task, config.data, 21);
    model = sft_train(Policy::random(config.architecture(config.task), init_seed(21)),
                      splits.train, config.sft);
    scores = score_dataset(model, splits.pool);
  }
  PipelineConfig config;
  Splits splits;
  Policy model;
  std::vector<ScoreRecord> scores;
};

TEST_F(DeskPool, EveryMemberBelowThresholdExhaustive) {
  const auto pool = build_rl_pool(scores, splits.pool, config.pool);
  ASSERT_FALSE(pool.empty());
  for (const Instance& i : pool) {
    const Confidence c =
        confidence_score(model, build_observation(i, PromptVariant::kWithContext));
    EXPECT_LT(c.confidence, 0.7) << "id " << i.id;
  }
}

TEST_F(DeskPool, LowConfidenceBucketsAreWorseThanAverage) {
  const UncertaintyReport r = uncertainty_report(scores);
  int checked = 0;
  for (const auto& b : r.buckets) {
    if (b.upper > 0.7 + 1e-12 || b.count == 0) continue;
    EXPECT_GT(b.error_rate, r.global_error_rate) << "bucket [" << b.lower << "," << b.upper << ")";
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

}  // namespace
}  // namespace ctxgate
