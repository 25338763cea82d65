#include "ctxgate/dpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ctxgate/optimizer.hpp"

namespace ctxgate {

namespace {

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

std::vector<PreferencePair> pairs_from_drafts(std::int64_t instance_id,
                                              const Observation& obs, Label gold,
                                              std::span<const TokenPair> drafts,
                                              std::size_t cap) {
  std::vector<TokenPair> pos, neg;
  for (const TokenPair& d : drafts) {
    auto& side = d.label == gold ? pos : neg;
    if (std::find(side.begin(), side.end(), d) == side.end()) side.push_back(d);
  }
  std::vector<PreferencePair> out;
  for (const TokenPair& p : pos) {
    for (const TokenPair& n : neg) {
      if (out.size() >= cap) return out;
      out.push_back({instance_id, obs, p, n});
    }
  }
  return out;
}

std::vector<PreferencePair> build_preference_pairs(const Policy& sft_policy,
                                                   std::span<const Instance> pool,
                                                   const PairConfig& config) {
  if (config.drafts_per_input < 2) throw ConfigError("dpo.drafts_per_input must be >= 2");
  const SamplingSpec spec{config.temperature, config.top_k, false};
  std::vector<PreferencePair> out;
  std::vector<TokenPair> drafts(config.drafts_per_input);
  for (const Instance& inst : pool) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(inst.id)));
    Observation obs = build_observation(inst, PromptVariant::kWithContext);
    const PolicyState state = evaluate(sft_policy, obs);
    for (auto& d : drafts) d = sample_sequence(state, obs.variant(), spec, rng).tokens;
    auto pairs = pairs_from_drafts(inst.id, obs, inst.gold, drafts, config.pair_cap);
    std::move(pairs.begin(), pairs.end(), std::back_inserter(out));
  }
  return out;
}

double dpo_margin(const Policy& policy, const Policy& ref,
                  const PreferencePair& pair, double beta) {
  const double pos = sequence_logprob(policy, pair.obs, pair.chosen) -
                     sequence_logprob(ref, pair.obs, pair.chosen);
  const double neg = sequence_logprob(policy, pair.obs, pair.rejected) -
                     sequence_logprob(ref, pair.obs, pair.rejected);
  return beta * (pos - neg);
}

double dpo_loss(const Policy& policy, const Policy& ref,
                const PreferencePair& pair, double beta, std::span<double> grad,
                double weight) {
  if (!(beta > 0.0)) throw ConfigError("dpo.beta must be > 0");
  const PolicyState s = evaluate(policy, pair.obs);
  const PolicyState r = evaluate(ref, pair.obs);
  auto seq = [](const PolicyState& st, TokenPair t) {
    const auto lp = token_logprobs(st, t);
    return lp[0] + lp[1];
  };
  const double margin = beta * ((seq(s, pair.chosen) - seq(r, pair.chosen)) -
                                (seq(s, pair.rejected) - seq(r, pair.rejected)));
  if (!grad.empty()) {
    // d/dmargin of -log sigmoid(margin) is -(1 - sigmoid(margin)).
    const double coeff = -weight * (1.0 - sigmoid(margin)) * beta;
    LogitGrads dl;
    add_sequence_logprob_gradient(s, pair.chosen, coeff, dl);
    add_sequence_logprob_gradient(s, pair.rejected, -coeff, dl);
    backprop(policy, s, dl, grad);
  }
  return -log_sigmoid(margin);
}

double mean_margin(const Policy& policy, const Policy& ref,
                   std::span<const PreferencePair> pairs, double beta) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : pairs) total += dpo_margin(policy, ref, p, beta);
  return total / static_cast<double>(pairs.size());
}

Policy dpo_train(Policy policy, const Policy& ref,
                 std::span<const PreferencePair> pairs, const DpoConfig& config,
                 DpoHistory* history) {
  if (config.epochs < 0) throw ConfigError("dpo.epochs must be non-negative");
  if (config.epochs == 0) return policy;
  if (pairs.empty()) throw EmptyDatasetError("dpo_train: no preference pairs");
  if (config.batch_size == 0) throw ConfigError("dpo.batch_size must be positive");

  if (history) history->mean_margin.push_back(mean_margin(policy, ref, pairs, config.beta));
  Rng rng(config.seed);
  AdamState state(policy.size());
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(policy.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      // Ascend the negative loss.
      const double w = -1.0 / static_cast<double>(end - begin);
      for (std::size_t b = begin; b < end; ++b)
        dpo_loss(policy, ref, pairs[order[b]], config.beta, grad, w);
      optimizer_step(policy.params(), grad, state, config.lr);
    }
    if (history) history->mean_margin.push_back(mean_margin(policy, ref, pairs, config.beta));
  }
  return policy;
}

}  // namespace ctxgate
