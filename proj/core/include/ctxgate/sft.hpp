#ifndef CTXGATE_SFT_HPP_
#define CTXGATE_SFT_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "ctxgate/env.hpp"
#include "ctxgate/policy.hpp"

namespace ctxgate {

struct SftConfig {
  int epochs = 2;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 0.01;
  // WITH_CONTEXT trains the RAG variant, NO_CONTEXT the parametric-only one.
  PromptVariant variant = PromptVariant::kWithContext;
  std::uint64_t seed = 0;
};

struct SftHistory {
  // Mean training cross-entropy before training and after each epoch.
  std::vector<double> epoch_loss;
};

// Usage target comes from the utility label (PARTIAL counts as ADOPT), the
// label target from the gold tier.
TokenPair sft_target(const Instance& inst);

double mean_cross_entropy(const Policy& policy, std::span<const Instance> data,
                          PromptVariant variant);

Policy sft_train(Policy policy, std::span<const Instance> data,
                 const SftConfig& config, SftHistory* history = nullptr);

struct Confidence {
  UsageToken usage = UsageToken::kAdopt;
  Label label = Label::kL1;
  double confidence = 0.0;
};

// Softmax over the four label logits; ties resolve to the lower tier index.
Confidence confidence_from_logits(std::span<const double> label_logits);

// Greedy usage token, then the most probable label and its probability.
Confidence confidence_score(const Policy& policy, const Observation& obs);

struct ScoreRecord {
  std::int64_t id = 0;
  Label predicted = Label::kL1;
  double confidence = 0.0;
  Label gold = Label::kL1;
};

std::vector<ScoreRecord> score_dataset(
    const Policy& policy, std::span<const Instance> data,
    PromptVariant variant = PromptVariant::kWithContext);

}  // namespace ctxgate

#endif  // CTXGATE_SFT_HPP_
