#include "ctxgate/sft.hpp"

#include <algorithm>
#include <numeric>

#include "ctxgate/optimizer.hpp"

namespace ctxgate {

TokenPair sft_target(const Instance& inst) {
  const UsageToken usage = inst.utility == Utility::kIgnore ? UsageToken::kIgnore
                                                            : UsageToken::kAdopt;
  return {usage, inst.gold};
}

double mean_cross_entropy(const Policy& policy, std::span<const Instance> data,
                          PromptVariant variant) {
  if (data.empty()) throw EmptyDatasetError("mean_cross_entropy: empty dataset");
  double total = 0.0;
  for (const Instance& inst : data)
    total -= sequence_logprob(policy, build_observation(inst, variant),
                              sft_target(inst));
  return total / static_cast<double>(data.size());
}

Policy sft_train(Policy policy, std::span<const Instance> data,
                 const SftConfig& config, SftHistory* history) {
  if (data.empty()) throw EmptyDatasetError("sft_train: empty dataset");
  if (config.batch_size == 0) throw ConfigError("sft.batch_size must be positive");
  if (config.epochs < 0) throw ConfigError("sft.epochs must be non-negative");

  std::vector<Observation> obs;
  obs.reserve(data.size());
  for (const Instance& inst : data) obs.push_back(build_observation(inst, config.variant));

  if (history) history->epoch_loss.push_back(mean_cross_entropy(policy, data, config.variant));

  Rng rng(config.seed);
  AdamState state(policy.size());
  const AdamConfig adam{.weight_decay = config.weight_decay};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(policy.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double w = 1.0 / static_cast<double>(end - begin);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t i = order[b];
        const PolicyState s = evaluate(policy, obs[i]);
        LogitGrads dl;
        add_sequence_logprob_gradient(s, sft_target(data[i]), w, dl);
        backprop(policy, s, dl, grad);
      }
      optimizer_step(policy.params(), grad, state, config.lr, adam);
    }
    if (history)
      history->epoch_loss.push_back(mean_cross_entropy(policy, data, config.variant));
  }
  return policy;
}

Confidence confidence_from_logits(std::span<const double> label_logits) {
  const TokenDistribution dist = token_distribution(label_logits, {});
  const int best = argmax_token(dist.prob);
  return {UsageToken::kAdopt, label_from_index(best), dist.prob[best]};
}

Confidence confidence_score(const Policy& policy, const Observation& obs) {
  const PolicyState s = evaluate(policy, obs);
  const int usage = argmax_token(s.usage_logits);
  Confidence c = confidence_from_logits(s.label_logits[usage]);
  c.usage = usage_from_index(usage);
  return c;
}

std::vector<ScoreRecord> score_dataset(const Policy& policy,
                                       std::span<const Instance> data,
                                       PromptVariant variant) {
  std::vector<ScoreRecord> out;
  out.reserve(data.size());
  for (const Instance& inst : data) {
    const Confidence c = confidence_score(policy, build_observation(inst, variant));
    out.push_back({inst.id, c.label, c.confidence, inst.gold});
  }
  return out;
}

}  // namespace ctxgate
