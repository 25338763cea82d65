#include "ctxgate/advantages.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ctxgate/types.hpp"

namespace ctxgate {

GroupStats group_statistics(std::span<const double> returns, double eps) {
  if (returns.empty()) throw ConfigError("group_statistics: empty group");
  const double n = static_cast<double>(returns.size());
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= n;
  // Summation round-off would otherwise leave tiny nonzero advantages.
  if (std::all_of(returns.begin(), returns.end(), [&](double r) { return r == returns[0]; }))
    mean = returns[0];
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= n;
  return {mean, std::sqrt(var + eps)};
}

std::vector<double> intra_group_advantages(std::span<const double> returns,
                                           double eps) {
  if (returns.size() < 2) throw ConfigError("rollout groups need at least 2 members");
  const GroupStats st = group_statistics(returns, eps);
  std::vector<double> adv(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i)
    adv[i] = (returns[i] - st.mean) / st.scale;
  return adv;
}

UnionStats union_statistics(std::span<const double> no_context_returns,
                            std::span<const double> with_context_returns,
                            double eps) {
  if (no_context_returns.size() != with_context_returns.size()) {
    throw ConfigError("union_statistics: group sizes differ (" +
                      std::to_string(no_context_returns.size()) + " vs " +
                      std::to_string(with_context_returns.size()) + ")");
  }
  if (no_context_returns.empty()) throw ConfigError("union_statistics: empty groups");
  const double n2 = 2.0 * static_cast<double>(no_context_returns.size());
  double mean = 0.0;
  for (double r : no_context_returns) mean += r;
  for (double r : with_context_returns) mean += r;
  mean /= n2;
  auto same = [&](double r) { return r == no_context_returns[0]; };
  if (std::all_of(no_context_returns.begin(), no_context_returns.end(), same) &&
      std::all_of(with_context_returns.begin(), with_context_returns.end(), same))
    mean = no_context_returns[0];
  double var = 0.0;
  for (double r : no_context_returns) var += (r - mean) * (r - mean);
  for (double r : with_context_returns) var += (r - mean) * (r - mean);
  var /= n2;
  return {mean, std::sqrt(var + eps)};
}

std::vector<double> inter_group_advantages(std::span<const double> no_context_returns,
                                           const UnionStats& stats) {
  std::vector<double> out(no_context_returns.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (no_context_returns[i] - stats.mu_star) / stats.s_star;
  return out;
}

ScalingCoeffs posterior_scaling(double acc_with, double acc_without) {
  const double gap = acc_with - acc_without;
  const double beta = 4.0 / (1.0 + std::exp(-4.0 * gap));
  return {0.1 / beta, beta, acc_with, acc_without};
}

ScalingCoeffs fixed_scaling(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw ConfigError("scaling coefficients must be positive");
  return {alpha, beta, 0.0, 0.0};
}

double piecewise_scale(double inter_advantage, const ScalingCoeffs& coeffs) {
  return inter_advantage > 0.0 ? coeffs.alpha * inter_advantage
                               : coeffs.beta * inter_advantage;
}

bool within_difficulty_band(std::span<const double> no_context_returns,
                            std::span<const double> with_context_returns,
                            const DifficultyBand& band) {
  const std::size_t n = no_context_returns.size() + with_context_returns.size();
  if (n == 0) return false;
  double sum = 0.0;
  for (double r : no_context_returns) sum += r;
  for (double r : with_context_returns) sum += r;
  const double mean = sum / static_cast<double>(n);
  return mean >= band.lower && mean <= band.upper;
}

double clamp_advantage(double value, double limit) {
  return std::clamp(value, -limit, limit);
}

}  // namespace ctxgate
