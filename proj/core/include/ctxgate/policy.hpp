#ifndef CTXGATE_POLICY_HPP_
#define CTXGATE_POLICY_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ctxgate/rng.hpp"
#include "ctxgate/types.hpp"

namespace ctxgate {

// Lower bound applied to every probability before taking a logarithm.
inline constexpr double kLogClamp = 1e-12;

struct Architecture {
  std::uint32_t query_dim = 8;
  std::uint32_t item_dim = 4;
  std::uint32_t context_dim = 4;
  std::uint32_t hidden = 32;
  std::uint32_t embed = 4;

  std::size_t input_dim() const {
    return std::size_t{query_dim} + item_dim + context_dim + 1;
  }
  std::size_t param_count() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Prompt features seen by the policy. Under the no-context prompt the
// context block is all zeros and context_flag is 0.
struct Observation {
  std::vector<double> query;
  std::vector<double> item;
  std::vector<double> context;
  double context_flag = 0.0;

  PromptVariant variant() const {
    return context_flag != 0.0 ? PromptVariant::kWithContext
                               : PromptVariant::kNoContext;
  }
};

// Offsets of each parameter block inside the flat vector.
//   w1  [hidden x input]      encoder weights (row-major)
//   b1  [hidden]
//   wu  [2 x hidden]          usage head
//   bu  [2]
//   emb [2 x embed]           usage-token embedding fed to the label head
//   wl  [4 x (hidden+embed)]  label head
//   bl  [4]
struct ParamLayout {
  std::size_t w1 = 0, b1 = 0, wu = 0, bu = 0, emb = 0, wl = 0, bl = 0;
  std::size_t total = 0;

  static ParamLayout of(const Architecture& arch);
};

// One-hidden-layer tanh encoder with an autoregressive two-token head.
class Policy {
 public:
  Policy() = default;
  // All-zero parameters.
  explicit Policy(const Architecture& arch);
  Policy(const Architecture& arch, std::vector<double> params);

  // Scaled Gaussian initialisation (fan-in scaling times `scale`).
  static Policy random(const Architecture& arch, std::uint64_t seed,
                       double scale = 1.0);

  const Architecture& arch() const { return arch_; }
  const ParamLayout& layout() const { return layout_; }
  std::size_t size() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  bool all_finite() const;

 private:
  Architecture arch_{};
  ParamLayout layout_{};
  std::vector<double> params_;
};

// Activations for one observation. The hidden layer does not depend on the
// usage token, so both possible label-position logit vectors are kept.
struct PolicyState {
  std::vector<double> input;
  std::vector<double> hidden;
  std::array<double, kUsageVocab> usage_logits{};
  std::array<std::array<double, kLabelVocab>, kUsageVocab> label_logits{};
};

// Upstream gradient with respect to every logit of a PolicyState.
struct LogitGrads {
  std::array<double, kUsageVocab> usage{};
  std::array<std::array<double, kLabelVocab>, kUsageVocab> label{};
};

PolicyState evaluate(const Policy& policy, const Observation& obs);

// Accumulates d(objective)/d(params) into `grad` given logit gradients.
void backprop(const Policy& policy, const PolicyState& state,
              const LogitGrads& dlogits, std::span<double> grad);

// Position 1 logits when prev_usage is empty, position 2 logits otherwise.
std::vector<double> forward(const Policy& policy, const Observation& obs,
                            std::optional<UsageToken> prev_usage);

struct SamplingSpec {
  double temperature = 1.0;
  int top_k = std::numeric_limits<int>::max();
  // Argmax decoding; the zero-temperature limit.
  bool greedy = false;

  static SamplingSpec Greedy() { return {1.0, 1, true}; }
};

// Categorical distribution actually used for sampling: temperature-scaled,
// restricted to the top_k logits and renormalised.
struct TokenDistribution {
  int size = 0;
  double inv_temperature = 1.0;
  bool greedy = false;
  std::array<bool, kLabelVocab> kept{};
  std::array<double, kLabelVocab> prob{};
  std::array<double, kLabelVocab> logprob{};
};

TokenDistribution token_distribution(std::span<const double> logits,
                                     const SamplingSpec& spec);

int sample_token(const TokenDistribution& dist, Rng& rng);

// Lowest index wins ties.
int argmax_token(std::span<const double> values);

// dlogits += weight * d log p(token) / d logits.
void add_logprob_gradient(const TokenDistribution& dist, int token,
                          double weight, std::span<double> dlogits);

struct SampledSequence {
  TokenPair tokens;
  std::array<double, kSequenceLength> logprobs{};
  PromptVariant variant = PromptVariant::kNoContext;
};

SampledSequence sample_sequence(const Policy& policy, const Observation& obs,
                                const SamplingSpec& spec, Rng& rng);
SampledSequence sample_sequence(const PolicyState& state,
                                PromptVariant variant,
                                const SamplingSpec& spec, Rng& rng);

// Per-token log-probabilities of a fixed sequence.
std::array<double, kSequenceLength> token_logprobs(
    const PolicyState& state, TokenPair tokens, const SamplingSpec& spec = {});

double sequence_logprob(const Policy& policy, const Observation& obs,
                        TokenPair tokens, const SamplingSpec& spec = {});

std::vector<double> sequence_logprob_gradient(const Policy& policy,
                                              const Observation& obs,
                                              TokenPair tokens,
                                              const SamplingSpec& spec = {});

// Adds weight * d(sum_t log p_t)/d logits for a fixed sequence.
void add_sequence_logprob_gradient(const PolicyState& state, TokenPair tokens,
                                   double weight, LogitGrads& dlogits,
                                   const SamplingSpec& spec = {});

// KL(p_a || p_b) of two categorical distributions given by logits. When
// dlogits_a is non-empty, weight * dKL/dlogits_a is accumulated into it.
double categorical_kl(std::span<const double> logits_a,
                      std::span<const double> logits_b,
                      std::span<double> dlogits_a = {}, double weight = 1.0);

// Exact KL between two policies at a single decoding position.
double kl_exact(const Policy& a, const Policy& b, const Observation& obs,
                std::optional<UsageToken> prev_usage);

}  // namespace ctxgate

#endif  // CTXGATE_POLICY_HPP_
