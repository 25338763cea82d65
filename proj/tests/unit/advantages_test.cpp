#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ctxgate/advantages.hpp"
#include "ctxgate/rng.hpp"
#include "ctxgate/types.hpp"

namespace ctxgate {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(IntraGroup, SymmetricCase) {
  const std::vector<double> r = {1, 1, 0, 0};
  const GroupStats st = group_statistics(r);
  EXPECT_DOUBLE_EQ(st.mean, 0.5);
  EXPECT_DOUBLE_EQ(st.scale, std::sqrt(0.25 + 1e-8));
  const auto a = intra_group_advantages(r);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(a[i], i < 2 ? 1.0 : -1.0, 1e-7);
}

TEST(IntraGroup, EqualReturnsGiveZero) {
  for (double a : intra_group_advantages(std::vector<double>(8, 0.7))) EXPECT_EQ(a, 0.0);
}

TEST(IntraGroup, SingleSuccess) {
  const std::vector<double> r = {1, 0, 0, 0};
  EXPECT_NEAR(group_statistics(r).scale, 0.43301, 1e-5);
  const auto a = intra_group_advantages(r);
  EXPECT_NEAR(a[0], 1.7321, 1e-4);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(a[i], -0.5774, 1e-4);
  // Same values from the formula, to 1e-12.
  const double s = std::sqrt(0.1875 + 1e-8);
  EXPECT_NEAR(a[0], 0.75 / s, 1e-12);
  EXPECT_NEAR(a[1], -0.25 / s, 1e-12);
}

TEST(UnionStats, WorkedExample) {
  const std::vector<double> g0 = {1, 0}, g1 = {1, 1};
  const UnionStats u = union_statistics(g0, g1);
  EXPECT_DOUBLE_EQ(u.mu_star, 0.75);
  EXPECT_NEAR(u.s_star, std::sqrt(0.1875 + 1e-8), 1e-15);
  EXPECT_NEAR(u.s_star, 0.43301, 1e-5);
  const auto at = inter_group_advantages(g0, u);
  EXPECT_NEAR(at[0], 0.5774, 1e-4);
  EXPECT_NEAR(at[1], -1.7321, 1e-4);
}

TEST(UnionStats, AllEqualGivesSqrtEps) {
  const std::vector<double> g(4, 1.0);
  EXPECT_DOUBLE_EQ(union_statistics(g, g).s_star, std::sqrt(kAdvantageEps));
}

TEST(UnionStats, SymmetricInGroupOrder) {
  const std::vector<double> g0 = {1, 0, 0, 1}, g1 = {0, 0, 0, 1};
  const UnionStats a = union_statistics(g0, g1), b = union_statistics(g1, g0);
  EXPECT_DOUBLE_EQ(a.mu_star, b.mu_star);
  EXPECT_DOUBLE_EQ(a.s_star, b.s_star);
}

TEST(UnionStats, RejectsUnequalGroups) {
  EXPECT_THROW(union_statistics(std::vector<double>{1, 0}, std::vector<double>{1}),
               ConfigError);
}

TEST(InterGroup, ReturnAtUnionMeanGivesZero) {
  const std::vector<double> g0 = {0.5, 1.0}, g1 = {0.0, 0.5};
  const UnionStats u = union_statistics(g0, g1);
  EXPECT_DOUBLE_EQ(u.mu_star, 0.5);
  EXPECT_EQ(inter_group_advantages(g0, u)[0], 0.0);
}

TEST(PosteriorScaling, WorkedValues) {
  const ScalingCoeffs z = posterior_scaling(0.5, 0.5);
  EXPECT_EQ(z.beta, 2.0);
  EXPECT_EQ(z.alpha, 0.05);
  const ScalingCoeffs p = posterior_scaling(1.0, 0.0);
  EXPECT_NEAR(p.beta, 3.92806, 1e-5);
  EXPECT_NEAR(p.alpha, 0.025458, 1e-6);
  const ScalingCoeffs n = posterior_scaling(0.25, 0.5);
  EXPECT_NEAR(n.beta, 1.07577, 1e-5);
  EXPECT_NEAR(n.alpha, 0.092957, 1e-6);
  EXPECT_NEAR(p.beta, 4.0 * sigmoid(4.0), 1e-14);
  EXPECT_NEAR(n.beta, 4.0 * sigmoid(-1.0), 1e-14);
}

TEST(PosteriorScaling, ProductAndRangeOverGaps) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const ScalingCoeffs c = posterior_scaling(u(rng), u(rng));
    EXPECT_NEAR(c.alpha * c.beta, 0.1, 1e-12);
    EXPECT_GT(c.beta, 4.0 * sigmoid(-4.0));
    EXPECT_LT(c.beta, 4.0 * sigmoid(4.0));
  }
  double prev = -1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double gap = -1.0 + 2.0 * k / 1000.0;
    const double beta = posterior_scaling(std::max(gap, 0.0), std::max(-gap, 0.0)).beta;
    EXPECT_GT(beta, prev);
    prev = beta;
  }
}

TEST(PiecewiseScale, Branches) {
  const ScalingCoeffs c = fixed_scaling(0.05, 2.0);
  EXPECT_DOUBLE_EQ(piecewise_scale(1.0, c), 0.05);
  EXPECT_DOUBLE_EQ(piecewise_scale(-1.0, c), -2.0);
  EXPECT_EQ(piecewise_scale(0.0, c), 0.0);
}

TEST(PiecewiseScale, SignPreservingAndContinuous) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.01, 4.0);
  for (int k = 0; k < 10000; ++k) {
    const ScalingCoeffs c = fixed_scaling(u(rng), u(rng));
    const double x = g(rng);
    EXPECT_GE(piecewise_scale(x, c) * x, 0.0);
    EXPECT_LT(std::abs(piecewise_scale(1e-12, c)), 1e-11);
    EXPECT_LT(std::abs(piecewise_scale(-1e-12, c)), 1e-11);
  }
}

TEST(DifficultyBand, Examples) {
  const DifficultyBand band;
  const std::vector<double> ones(8, 1.0), zeros(8, 0.0), half = {1, 0, 1, 0, 1, 0, 1, 0};
  EXPECT_FALSE(within_difficulty_band(ones, ones, band));
  EXPECT_FALSE(within_difficulty_band(zeros, zeros, band));
  EXPECT_TRUE(within_difficulty_band(half, half, band));
  EXPECT_TRUE(within_difficulty_band(ones, zeros, band));
  // The single-group baseline passes an empty no-context group.
  EXPECT_TRUE(within_difficulty_band({}, half, band));
}

TEST(ClampAdvantage, Bounds) {
  EXPECT_EQ(clamp_advantage(3.0, 2.0), 2.0);
  EXPECT_EQ(clamp_advantage(-3.0, 2.0), -2.0);
  EXPECT_EQ(clamp_advantage(0.5, 2.0), 0.5);
}

// Property sweep over random groups of mixed returns.
class RandomGroups : public ::testing::Test {
 protected:
  std::vector<double> group(int n) {
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> r(n);
    const int k = kind(rng);
    for (double& v : r) v = k == 0 ? (coin(rng) ? 1.0 : 0.0) : k == 1 ? u(rng) : std::round(u(rng));
    return r;
  }
  std::mt19937_64 rng{99};
};

TEST_F(RandomGroups, MixedBinaryGroupsHaveUnitSpread) {
  // Rewards are 0/1, so a mixed group has spread >= sqrt(15)/16 and the
  // eps term moves the advantage spread by less than 1e-7.
  std::uniform_int_distribution<int> size(2, 16);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 10000; ++k) {
    std::vector<double> r(size(rng));
    do {
      for (double& v : r) v = coin(rng) ? 1.0 : 0.0;
    } while (group_statistics(r, 0.0).scale < 1e-3);
    const auto a = intra_group_advantages(r);
    double mean = 0.0, var = 0.0;
    for (double v : a) mean += v;
    mean /= a.size();
    for (double v : a) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / a.size());
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_GE(sd, 1.0 - 1e-6);
    EXPECT_LE(sd, 1.0);
  }
}

TEST_F(RandomGroups, IntraGroupMomentsAndTranslation) {
  std::uniform_int_distribution<int> size(2, 16);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (int k = 0; k < 10000; ++k) {
    const auto r = group(size(rng));
    const auto a = intra_group_advantages(r);
    double mean = 0.0;
    for (double v : a) mean += v;
    mean /= a.size();
    EXPECT_NEAR(mean, 0.0, 1e-9);
    // Spread is exactly s / sqrt(s^2 + eps) for raw spread s.
    const double s = group_statistics(r, 0.0).scale;
    double var = 0.0;
    for (double v : a) var += (v - mean) * (v - mean);
    EXPECT_NEAR(std::sqrt(var / a.size()), s / std::sqrt(s * s + kAdvantageEps), 1e-12);
    auto moved = r;
    const double c = shift(rng);
    for (double& v : moved) v += c;
    const auto b = intra_group_advantages(moved);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST_F(RandomGroups, UnionAndInterMatchDirectFormula) {
  std::uniform_int_distribution<int> size(2, 16);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (int k = 0; k < 10000; ++k) {
    const int n = size(rng);
    const auto g0 = group(n), g1 = group(n);
    double mu = 0.0;
    for (double v : g0) mu += v;
    for (double v : g1) mu += v;
    mu /= 2 * n;
    double var = 0.0;
    for (double v : g0) var += (v - mu) * (v - mu);
    for (double v : g1) var += (v - mu) * (v - mu);
    const double s = std::sqrt(var / (2 * n) + kAdvantageEps);
    const UnionStats u = union_statistics(g0, g1);
    EXPECT_NEAR(u.mu_star, mu, 1e-12);
    EXPECT_NEAR(u.s_star, s, 1e-12);
    const auto at = inter_group_advantages(g0, u);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(at[i], (g0[i] - mu) / s, 1e-12);

    auto m0 = g0, m1 = g1;
    const double c = shift(rng);
    for (double& v : m0) v += c;
    for (double& v : m1) v += c;
    const auto bt = inter_group_advantages(m0, union_statistics(m0, m1));
    for (int i = 0; i < n; ++i) EXPECT_NEAR(at[i], bt[i], 1e-9);
  }
}

}  // namespace
}  // namespace ctxgate
