#ifndef CTXGATE_METRICS_HPP_
#define CTXGATE_METRICS_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ctxgate/env.hpp"
#include "ctxgate/policy.hpp"

namespace ctxgate {

// Rows are gold tiers, columns predicted tiers (both L1..L4).
using ConfusionMatrix = std::array<std::array<std::size_t, kLabelVocab>, kLabelVocab>;

struct ClassificationScores {
  ConfusionMatrix confusion{};
  std::size_t total = 0;
  // Percentages. F1 is 0 when precision + recall is 0.
  std::array<double, kLabelVocab> f1{};
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

ClassificationScores score_predictions(std::span<const Label> gold,
                                       std::span<const Label> predicted);
ClassificationScores scores_from_confusion(const ConfusionMatrix& confusion);

struct UsageStats {
  std::size_t decisions = 0;
  std::size_t adopted = 0;
  std::array<std::size_t, kNumUtilities> by_utility{};
  std::array<std::size_t, kNumUtilities> adopted_by_utility{};

  // Percent of ADOPT decisions overall / among instances with utility u.
  double adopt_rate() const;
  double adopt_rate(Utility u) const;
};

struct MetricsReport {
  PromptVariant variant = PromptVariant::kWithContext;
  ClassificationScores overall;
  std::array<ClassificationScores, kNumCategories> by_category{};
  UsageStats usage;
};

// Greedy decoding on every instance; read-only in the policy.
MetricsReport evaluate(const Policy& policy, std::span<const Instance> dataset,
                       PromptVariant variant);

}  // namespace ctxgate

#endif  // CTXGATE_METRICS_HPP_
