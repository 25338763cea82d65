#ifndef CTXGATE_ADVANTAGES_HPP_
#define CTXGATE_ADVANTAGES_HPP_

#include <span>
#include <vector>

namespace ctxgate {

// Variance regulariser inside every z-score scale.
inline constexpr double kAdvantageEps = 1e-8;

// Population mean and sqrt(population variance + eps).
struct GroupStats {
  double mean = 0.0;
  double scale = 0.0;
};

GroupStats group_statistics(std::span<const double> returns,
                            double eps = kAdvantageEps);

// (R_i - mean) / scale for every return of one group.
std::vector<double> intra_group_advantages(std::span<const double> returns,
                                           double eps = kAdvantageEps);

// Pooled statistics over both groups (2n returns). Groups must have equal size.
struct UnionStats {
  double mu_star = 0.0;
  double s_star = 0.0;
};

UnionStats union_statistics(std::span<const double> no_context_returns,
                            std::span<const double> with_context_returns,
                            double eps = kAdvantageEps);

// No-context returns z-scored against the union statistics.
std::vector<double> inter_group_advantages(std::span<const double> no_context_returns,
                                           const UnionStats& stats);

// alpha scales positive inter-group advantages, beta non-positive ones.
struct ScalingCoeffs {
  double alpha = 0.0;
  double beta = 0.0;
  double acc_with = 0.0;
  double acc_without = 0.0;
};

// beta = 4 * sigmoid(4 * (acc_with - acc_without)), alpha = 0.1 / beta.
ScalingCoeffs posterior_scaling(double acc_with, double acc_without);

ScalingCoeffs fixed_scaling(double alpha, double beta);

double piecewise_scale(double inter_advantage, const ScalingCoeffs& coeffs);

struct DifficultyBand {
  double lower = 0.01;
  double upper = 0.9;
};

// Keep a prompt iff the mean of all its returns lies in the closed band.
bool within_difficulty_band(std::span<const double> no_context_returns,
                            std::span<const double> with_context_returns,
                            const DifficultyBand& band);

double clamp_advantage(double value, double limit);

}  // namespace ctxgate

#endif  // CTXGATE_ADVANTAGES_HPP_
