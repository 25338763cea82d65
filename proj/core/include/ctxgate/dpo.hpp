#ifndef CTXGATE_DPO_HPP_
#define CTXGATE_DPO_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ctxgate/env.hpp"
#include "ctxgate/policy.hpp"

namespace ctxgate {

struct PreferencePair {
  std::int64_t instance_id = 0;
  Observation obs;  // with-context prompt
  TokenPair chosen;
  TokenPair rejected;
};

struct PairConfig {
  int drafts_per_input = 16;
  double temperature = 0.99;
  int top_k = 100;
  // Bound on the positive x negative cross product per instance.
  std::size_t pair_cap = 8;
  std::uint64_t seed = 0;
};

// Deduplicates drafts, splits them by agreement with the gold tier, and
// forms positive-major cross pairs up to `cap`.
std::vector<PreferencePair> pairs_from_drafts(
    std::int64_t instance_id, const Observation& obs, Label gold,
    std::span<const TokenPair> drafts,
    std::size_t cap = std::numeric_limits<std::size_t>::max());

std::vector<PreferencePair> build_preference_pairs(const Policy& sft_policy,
                                                   std::span<const Instance> pool,
                                                   const PairConfig& config);

// beta * [(log pi(y+) - log ref(y+)) - (log pi(y-) - log ref(y-))].
double dpo_margin(const Policy& policy, const Policy& ref,
                  const PreferencePair& pair, double beta);

// -log sigmoid(margin). When grad is non-empty, d loss / d params is
// accumulated into it scaled by `weight`; the reference gets no gradient.
double dpo_loss(const Policy& policy, const Policy& ref,
                const PreferencePair& pair, double beta,
                std::span<double> grad = {}, double weight = 1.0);

struct DpoConfig {
  int epochs = 3;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double beta = 0.1;
  std::uint64_t seed = 0;
};

struct DpoHistory {
  // Mean margin before training and after each epoch.
  std::vector<double> mean_margin;
};

double mean_margin(const Policy& policy, const Policy& ref,
                   std::span<const PreferencePair> pairs, double beta);

Policy dpo_train(Policy policy, const Policy& ref,
                 std::span<const PreferencePair> pairs, const DpoConfig& config,
                 DpoHistory* history = nullptr);

}  // namespace ctxgate

#endif  // CTXGATE_DPO_HPP_
