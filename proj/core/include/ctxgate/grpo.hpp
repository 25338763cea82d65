#ifndef CTXGATE_GRPO_HPP_
#define CTXGATE_GRPO_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ctxgate/advantages.hpp"
#include "ctxgate/env.hpp"
#include "ctxgate/optimizer.hpp"
#include "ctxgate/policy.hpp"

namespace ctxgate {

enum class ScalingMode : std::uint8_t {
  // (alpha, beta) from the batch accuracy gap between prompt variants.
  kPosterior,
  // Constant (fixed_alpha, fixed_beta).
  kFixed,
  // (0.05, 2) on ADOPT/PARTIAL utility labels, (2, 0.05) on IGNORE.
  kLabelGated,
};

std::string_view to_string(ScalingMode m);
ScalingMode parse_scaling_mode(std::string_view s);

struct GrpoConfig {
  int n_per_group = 8;
  double temperature = 0.99;
  int top_k = 100;
  std::size_t rollout_batch = 64;
  double clip_eps = 0.2;
  double adv_clamp = 2.0;
  double lambda_kl = 0.02;
  double lr = 3e-4;
  DifficultyBand band;
  ScalingMode scaling = ScalingMode::kPosterior;
  double fixed_alpha = 2.0;
  double fixed_beta = 0.05;
  // Accuracy gap per prompt instead of per rollout batch.
  bool per_query_gap = false;
  // Cross-prompt term on log-probabilities instead of raw probabilities.
  bool crossprompt_logprob = false;
  int steps = 300;
  std::uint64_t seed = 0;

  void validate() const;
  SamplingSpec sampling() const { return {temperature, top_k, false}; }
};

struct RolloutGroup {
  PromptVariant variant = PromptVariant::kNoContext;
  std::vector<SampledSequence> rollouts;
  std::vector<double> returns;
  double mean = 0.0;
  double scale = 0.0;
  std::vector<double> advantages;
};

// n samples from the frozen old policy under one prompt variant, with
// returns filled in. Advantages are left empty.
RolloutGroup rollout_group(const Policy& old_policy, const Instance& inst,
                           PromptVariant variant, int n, const SamplingSpec& spec,
                           Rng& rng);

std::pair<RolloutGroup, RolloutGroup> rollout_dual_groups(const Policy& old_policy,
                                                          const Instance& inst,
                                                          const GrpoConfig& config,
                                                          Rng& rng);

// Fills mean, scale and z-scored advantages.
void compute_intra_group_advantages(RolloutGroup& group);

struct ClipStats {
  std::size_t tokens = 0;
  std::size_t clipped = 0;
};

// Length-normalised clipped surrogate of one group, evaluated under `obs`
// (the prompt the group was sampled from). Uses group.advantages as given.
// Accumulates weight * d/dparams into grad when non-empty.
double surrogate_loss_intra(const Policy& policy, const RolloutGroup& group,
                            const Observation& obs, const GrpoConfig& config,
                            std::span<double> grad = {}, double weight = 1.0,
                            ClipStats* stats = nullptr);

// No-context sequences re-scored under the with-context prompt, weighted by
// the (already scaled and clamped) inter-group advantages.
double crossprompt_loss(const Policy& policy, const RolloutGroup& no_context_group,
                        const Observation& with_context_obs,
                        std::span<const double> scaled_advantages,
                        const GrpoConfig& config, std::span<double> grad = {},
                        double weight = 1.0);

// Positions reached by a set of rollouts under one observation.
struct VisitedStates {
  const Observation* obs = nullptr;
  std::size_t first_position = 0;
  std::array<std::size_t, kUsageVocab> second_position{};

  static VisitedStates of(const Observation& obs, const RolloutGroup& group);
  std::size_t total() const {
    return first_position + second_position[0] + second_position[1];
  }
};

// Visit-weighted mean exact KL(policy || ref) over all visited positions.
double kl_over_states(const Policy& policy, const Policy& ref,
                      std::span<const VisitedStates> states,
                      std::span<double> grad = {}, double weight = 1.0);

// One prompt of a rollout batch with every advantage structure attached.
struct PreparedPrompt {
  const Instance* inst = nullptr;
  Observation no_context_obs;
  Observation with_context_obs;
  RolloutGroup no_context;  // empty for the single-group baseline
  RolloutGroup with_context;
  std::vector<double> inter_advantages;
  std::vector<double> scaled_advantages;  // clamp(T(inter_advantages))
  ScalingCoeffs coeffs;
};

struct ObjectiveParts {
  double intra_no_context = 0.0;
  double intra_with_context = 0.0;
  double crossprompt = 0.0;
  double kl = 0.0;
  double total = 0.0;
  ClipStats clip;
};

// J = mean over prompts of (l0 + l1 + l_cross) - lambda_kl * KL.
ObjectiveParts total_objective(const Policy& policy, const Policy& ref,
                               std::span<const PreparedPrompt> prompts,
                               const GrpoConfig& config,
                               std::span<double> grad = {});

struct StepMetrics {
  int step = 0;
  double mean_return_no_ctx = 0.0;
  double mean_return_with_ctx = 0.0;
  double acc_gap = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  std::size_t filtered_count = 0;
  std::size_t kept_count = 0;
  double objective = 0.0;
  bool skipped = false;
};

// Which parts of the dual-group machinery a step uses.
struct StepVariant {
  bool no_context_group = true;
  bool crossprompt = true;
};

// Rolls out, filters by difficulty, builds advantages and scaling once per
// batch, and applies one ascent step on J. `old_policy` is the frozen
// snapshot that generated the rollouts.
StepMetrics grpo_step(Policy& policy, AdamState& optimizer, const Policy& old_policy,
                      const Policy& ref, std::span<const Instance> batch,
                      const GrpoConfig& config, Rng& rng,
                      const StepVariant& variant = {});

// Standard single-group GRPO under the with-context prompt with 2n rollouts.
StepMetrics vanilla_grpo_step(Policy& policy, AdamState& optimizer,
                              const Policy& old_policy, const Policy& ref,
                              std::span<const Instance> batch,
                              const GrpoConfig& config, Rng& rng);

// Rollout + advantage preparation shared by the step functions.
std::vector<PreparedPrompt> prepare_batch(const Policy& old_policy,
                                          std::span<const Instance> batch,
                                          const GrpoConfig& config, Rng& rng,
                                          const StepVariant& variant,
                                          StepMetrics& metrics);

enum class GrpoAlgorithm : std::uint8_t { kDualGroup, kVanilla };

std::string_view to_string(GrpoAlgorithm a);
GrpoAlgorithm parse_algorithm(std::string_view s);

struct GrpoRun {
  Policy policy;
  AdamState optimizer;
  std::vector<StepMetrics> metrics;
};

using StepSink = std::function<void(const StepMetrics&)>;

// config.steps waves over the pool; the KL reference is `init`.
GrpoRun train_grpo(const Policy& init, std::span<const Instance> pool,
                   const GrpoConfig& config, GrpoAlgorithm algorithm,
                   const StepSink& sink = {});

}  // namespace ctxgate

#endif  // CTXGATE_GRPO_HPP_
