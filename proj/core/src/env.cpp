#include "ctxgate/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace ctxgate {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// Chunk slot `slot` of a context block.
std::span<const double> chunk(const std::vector<double>& context,
                              std::uint32_t slot) {
  return std::span<const double>(context).subspan(slot * kChunkDim, kChunkDim);
}

}  // namespace

void TaskConfig::validate() const {
  double total = 0.0;
  for (double p : label_probs) {
    if (!is_probability(p)) throw ConfigError("task.label_probs: entry outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("task.label_probs: must sum to 1");
  if (!is_probability(p_high_ambiguity))
    throw ConfigError("task.p_high_ambiguity: outside [0,1]");
  if (!is_probability(q_mislead)) throw ConfigError("task.q_mislead: outside [0,1]");
  if (sigma_low < 0 || sigma_high < 0 || context_sigma < 0 || query_pad_sigma < 0)
    throw ConfigError("task: noise sigmas must be non-negative");
  if (query_dim < static_cast<std::uint32_t>(kNumCategories))
    throw ConfigError("task.query_dim: must be at least 4");
  if (n_chunks != 1 && n_chunks != 3)
    throw ConfigError("task.n_chunks: must be 1 or 3");
}

Architecture architecture_for(const TaskConfig& config, std::uint32_t hidden,
                              std::uint32_t embed) {
  Architecture a;
  a.query_dim = config.query_dim;
  a.item_dim = config.item_dim();
  a.context_dim = config.context_dim();
  a.hidden = hidden;
  a.embed = embed;
  return a;
}

std::vector<Instance> generate_dataset(const TaskConfig& config,
                                       std::int64_t first_id) {
  config.validate();
  if (config.n_instances == 0)
    throw EmptyDatasetError("generate_dataset: n_instances is zero");

  Rng rng(config.seed);
  std::uniform_int_distribution<int> pick_category(0, kNumCategories - 1);
  std::discrete_distribution<int> pick_label(config.label_probs.begin(),
                                             config.label_probs.end());
  std::bernoulli_distribution high(config.p_high_ambiguity);
  std::bernoulli_distribution mislead(config.q_mislead);
  std::uniform_int_distribution<int> pick_other(0, kLabelVocab - 2);
  std::uniform_int_distribution<int> pick_any(0, kLabelVocab - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto one_hot_plus_noise = [&](int hot, double scale, double sigma) {
    std::vector<double> v(kLabelVocab);
    for (int k = 0; k < kLabelVocab; ++k)
      v[k] = (k == hot ? scale : 0.0) + sigma * gauss(rng);
    return v;
  };

  std::vector<Instance> out;
  out.reserve(config.n_instances);
  for (std::size_t n = 0; n < config.n_instances; ++n) {
    Instance inst;
    inst.id = first_id + static_cast<std::int64_t>(n);
    inst.category = static_cast<Category>(pick_category(rng));
    const int y = pick_label(rng);
    inst.gold = label_from_index(y);
    inst.ambiguity = high(rng) ? Ambiguity::kHigh : Ambiguity::kLow;

    const bool is_high = inst.ambiguity == Ambiguity::kHigh;
    inst.item = one_hot_plus_noise(y, is_high ? config.high_signal_scale : 1.0,
                                   is_high ? config.sigma_high : config.sigma_low);

    inst.query.assign(config.query_dim, 0.0);
    inst.query[index(inst.category)] = 1.0;
    for (std::size_t k = kNumCategories; k < config.query_dim; ++k)
      inst.query[k] = config.query_pad_sigma * gauss(rng);

    int pointed = y;
    if (mislead(rng)) {
      const int r = pick_other(rng);
      pointed = r >= y ? r + 1 : r;
      inst.utility = Utility::kIgnore;
    } else {
      inst.utility = is_high ? Utility::kAdopt : Utility::kPartial;
    }
    std::vector<std::vector<double>> chunks;
    chunks.push_back(one_hot_plus_noise(pointed, 1.0, config.context_sigma));
    // Lower-ranked chunks are retrieved for the query, not the item: the tier
    // they point at is independent of the gold tier.
    for (std::uint32_t k = 1; k < config.n_chunks; ++k)
      chunks.push_back(
          one_hot_plus_noise(pick_any(rng), 1.0, config.context_sigma));

    // Merged chunks carry no rank marker.
    std::vector<std::uint32_t> order(config.n_chunks);
    std::iota(order.begin(), order.end(), 0u);
    if (config.n_chunks > 1) std::shuffle(order.begin(), order.end(), rng);
    inst.context.reserve(config.context_dim());
    for (std::uint32_t slot = 0; slot < config.n_chunks; ++slot) {
      if (order[slot] == 0) inst.top_chunk = slot;
      const auto& c = chunks[order[slot]];
      inst.context.insert(inst.context.end(), c.begin(), c.end());
    }
    out.push_back(std::move(inst));
  }
  return out;
}

Observation build_observation(const Instance& inst, PromptVariant variant) {
  Observation obs;
  obs.query = inst.query;
  obs.item = inst.item;
  if (variant == PromptVariant::kWithContext) {
    obs.context = inst.context;
    obs.context_flag = 1.0;
  } else {
    obs.context.assign(inst.context.size(), 0.0);
    obs.context_flag = 0.0;
  }
  return obs;
}

double reward(Label predicted, Label gold) {
  return predicted == gold ? 1.0 : 0.0;
}

Label parametric_guess(const Instance& inst) {
  return label_from_index(argmax_token(inst.item));
}

TokenPair oracle_policy(const Instance& inst) {
  if (inst.utility == Utility::kIgnore)
    return {UsageToken::kIgnore, parametric_guess(inst)};
  return {UsageToken::kAdopt,
          label_from_index(argmax_token(chunk(inst.context, inst.top_chunk)))};
}

}  // namespace ctxgate
