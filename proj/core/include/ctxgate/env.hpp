#ifndef CTXGATE_ENV_HPP_
#define CTXGATE_ENV_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "ctxgate/policy.hpp"
#include "ctxgate/types.hpp"

namespace ctxgate {

// Width of one context chunk and of the parametric item block (one slot per
// relevance tier).
inline constexpr std::uint32_t kChunkDim = kLabelVocab;
inline constexpr std::uint32_t kItemDim = kLabelVocab;

struct TaskConfig {
  std::size_t n_instances = 4000;
  // Indexed by label token (L1..L4). Defaults follow the 6/27/7/60 split of
  // the production test set.
  std::array<double, kLabelVocab> label_probs = {0.06, 0.27, 0.07, 0.60};
  double p_high_ambiguity = 0.40;
  // Probability that the top chunk points at a wrong tier.
  double q_mislead = 0.30;
  double sigma_low = 0.15;
  double sigma_high = 0.6;
  // Magnitude of the parametric one-hot under high ambiguity.
  double high_signal_scale = 0.35;
  double context_sigma = 0.15;
  double query_pad_sigma = 0.1;
  // Category one-hot (4) plus Gaussian padding.
  std::uint32_t query_dim = 8;
  // 1 = top chunk only; 3 = top chunk merged with two lower-ranked chunks.
  std::uint32_t n_chunks = 1;
  std::uint64_t seed = 0;

  std::uint32_t item_dim() const { return kItemDim; }
  std::uint32_t context_dim() const { return kChunkDim * n_chunks; }

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

struct Instance {
  std::int64_t id = 0;
  Category category = Category::kNegation;
  Label gold = Label::kL4;
  Ambiguity ambiguity = Ambiguity::kLow;
  Utility utility = Utility::kPartial;
  std::vector<double> query;
  std::vector<double> item;
  std::vector<double> context;
  // Which chunk slot holds the top-ranked chunk (always 0 for one chunk).
  std::uint32_t top_chunk = 0;
};

Architecture architecture_for(const TaskConfig& config, std::uint32_t hidden = 32,
                              std::uint32_t embed = 4);

// Deterministic in config.seed. Ids are first_id, first_id + 1, ...
std::vector<Instance> generate_dataset(const TaskConfig& config,
                                       std::int64_t first_id = 0);

Observation build_observation(const Instance& inst, PromptVariant variant);

// Binary outcome reward.
double reward(Label predicted, Label gold);

// Skyline policy that reads the latent utility flag.
TokenPair oracle_policy(const Instance& inst);

// Argmax over the item block alone.
Label parametric_guess(const Instance& inst);

}  // namespace ctxgate

#endif  // CTXGATE_ENV_HPP_
