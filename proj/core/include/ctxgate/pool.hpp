#ifndef CTXGATE_POOL_HPP_
#define CTXGATE_POOL_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ctxgate/env.hpp"
#include "ctxgate/sft.hpp"

namespace ctxgate {

inline constexpr int kConfidenceBuckets = 10;

struct PoolConfig {
  double threshold = 0.7;
  // Absolute per-category ceiling.
  std::optional<std::size_t> category_cap;
  // Largest allowed ratio between the biggest and smallest category.
  std::optional<double> cap_ratio = 2.0;
  std::uint64_t seed = 0;
};

// Counts of scores per confidence decile [k/10, (k+1)/10).
using ConfidenceHistogram = std::array<std::size_t, kConfidenceBuckets>;

ConfidenceHistogram confidence_histogram(std::span<const ScoreRecord> scores);

class EmptyPoolError : public std::runtime_error {
 public:
  EmptyPoolError(double threshold, ConfidenceHistogram histogram);
  const ConfidenceHistogram& histogram() const { return histogram_; }

 private:
  ConfidenceHistogram histogram_;
};

// Keeps instances scored below the threshold, then downsamples categories to
// the caps while keeping every relevance tier and utility state that
// survived the threshold. Result is sorted by id.
std::vector<Instance> build_rl_pool(std::span<const ScoreRecord> scores,
                                    std::span<const Instance> dataset,
                                    const PoolConfig& config);

struct UncertaintyBucket {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double error_rate = 0.0;
};

struct UncertaintyReport {
  std::array<UncertaintyBucket, kConfidenceBuckets> buckets{};
  std::size_t total = 0;
  double global_error_rate = 0.0;
  // Error rate non-increasing in confidence over the occupied buckets.
  bool monotone = true;

  std::size_t occupied() const;
};

UncertaintyReport uncertainty_report(std::span<const ScoreRecord> scores);

}  // namespace ctxgate

#endif  // CTXGATE_POOL_HPP_
