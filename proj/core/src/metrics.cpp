#include "ctxgate/metrics.hpp"

namespace ctxgate {

ClassificationScores scores_from_confusion(const ConfusionMatrix& confusion) {
  ClassificationScores s;
  s.confusion = confusion;
  std::size_t correct = 0;
  for (int g = 0; g < kLabelVocab; ++g)
    for (int p = 0; p < kLabelVocab; ++p) {
      s.total += confusion[g][p];
      if (g == p) correct += confusion[g][p];
    }
  double f1_sum = 0.0;
  for (int k = 0; k < kLabelVocab; ++k) {
    std::size_t actual = 0, predicted = 0;
    for (int j = 0; j < kLabelVocab; ++j) {
      actual += confusion[k][j];
      predicted += confusion[j][k];
    }
    const double tp = static_cast<double>(confusion[k][k]);
    // 2tp / (actual + predicted) equals 2PR/(P+R), and is 0 when both vanish.
    const double denom = static_cast<double>(actual + predicted);
    s.f1[k] = denom > 0.0 ? 100.0 * 2.0 * tp / denom : 0.0;
    f1_sum += s.f1[k];
  }
  s.macro_f1 = f1_sum / kLabelVocab;
  s.accuracy = s.total ? 100.0 * static_cast<double>(correct) / static_cast<double>(s.total)
                       : 0.0;
  return s;
}

ClassificationScores score_predictions(std::span<const Label> gold,
                                       std::span<const Label> predicted) {
  if (gold.size() != predicted.size())
    throw ConfigError("score_predictions: size mismatch");
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < gold.size(); ++i) ++m[index(gold[i])][index(predicted[i])];
  return scores_from_confusion(m);
}

double UsageStats::adopt_rate() const {
  return decisions ? 100.0 * static_cast<double>(adopted) / static_cast<double>(decisions)
                   : 0.0;
}

double UsageStats::adopt_rate(Utility u) const {
  const std::size_t n = by_utility[index(u)];
  return n ? 100.0 * static_cast<double>(adopted_by_utility[index(u)]) /
                 static_cast<double>(n)
           : 0.0;
}

MetricsReport evaluate(const Policy& policy, std::span<const Instance> dataset,
                       PromptVariant variant) {
  if (dataset.empty()) throw EmptyDatasetError("evaluate: empty dataset");
  MetricsReport r;
  r.variant = variant;
  ConfusionMatrix all{};
  std::array<ConfusionMatrix, kNumCategories> per_cat{};
  for (const Instance& inst : dataset) {
    const PolicyState s = evaluate(policy, build_observation(inst, variant));
    const int usage = argmax_token(s.usage_logits);
    const int label = argmax_token(s.label_logits[usage]);
    ++all[index(inst.gold)][label];
    ++per_cat[index(inst.category)][index(inst.gold)][label];
    ++r.usage.decisions;
    ++r.usage.by_utility[index(inst.utility)];
    if (usage == index(UsageToken::kAdopt)) {
      ++r.usage.adopted;
      ++r.usage.adopted_by_utility[index(inst.utility)];
    }
  }
  r.overall = scores_from_confusion(all);
  for (int c = 0; c < kNumCategories; ++c) r.by_category[c] = scores_from_confusion(per_cat[c]);
  return r;
}

}  // namespace ctxgate
