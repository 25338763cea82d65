#include "ctxgate/pool.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace ctxgate {

namespace {

int bucket_of(double confidence) {
  const int b = static_cast<int>(std::floor(confidence * kConfidenceBuckets));
  return std::clamp(b, 0, kConfidenceBuckets - 1);
}

std::string describe(double threshold, const ConfidenceHistogram& h) {
  std::string msg = "RL pool is empty: no instance has confidence < " +
                    std::to_string(threshold) + "; confidence histogram:";
  for (int b = 0; b < kConfidenceBuckets; ++b) {
    msg += " [" + std::to_string(b / 10.0).substr(0, 3) + "," +
           std::to_string((b + 1) / 10.0).substr(0, 3) + ")=" + std::to_string(h[b]);
  }
  return msg;
}

}  // namespace

ConfidenceHistogram confidence_histogram(std::span<const ScoreRecord> scores) {
  ConfidenceHistogram h{};
  for (const auto& s : scores) ++h[bucket_of(s.confidence)];
  return h;
}

EmptyPoolError::EmptyPoolError(double threshold, ConfidenceHistogram histogram)
    : std::runtime_error(describe(threshold, histogram)), histogram_(histogram) {}

std::vector<Instance> build_rl_pool(std::span<const ScoreRecord> scores,
                                    std::span<const Instance> dataset,
                                    const PoolConfig& config) {
  std::unordered_map<std::int64_t, double> conf;
  conf.reserve(scores.size());
  for (const auto& s : scores) conf[s.id] = s.confidence;

  std::vector<const Instance*> filtered;
  for (const Instance& inst : dataset) {
    const auto it = conf.find(inst.id);
    if (it == conf.end())
      throw ConfigError("no confidence score for instance " + std::to_string(inst.id));
    if (it->second < config.threshold) filtered.push_back(&inst);
  }
  if (filtered.empty()) throw EmptyPoolError(config.threshold, confidence_histogram(scores));

  Rng rng(config.seed);
  std::array<std::vector<const Instance*>, kNumCategories> by_cat;
  for (const Instance* p : filtered) by_cat[index(p->category)].push_back(p);
  std::size_t min_count = filtered.size();
  for (auto& list : by_cat) {
    std::shuffle(list.begin(), list.end(), rng);
    if (!list.empty()) min_count = std::min(min_count, list.size());
  }
  std::size_t cap = filtered.size();
  if (config.cap_ratio) {
    if (*config.cap_ratio < 1.0) throw ConfigError("pool.cap_ratio must be >= 1");
    cap = std::min(cap, static_cast<std::size_t>(
                            std::floor(*config.cap_ratio * static_cast<double>(min_count))));
  }
  if (config.category_cap) cap = std::min(cap, *config.category_cap);
  cap = std::max<std::size_t>(cap, 1);

  // kept[c] is a prefix-ordered selection from by_cat[c].
  std::array<std::vector<const Instance*>, kNumCategories> kept;
  std::array<std::size_t, kLabelVocab> tier_count{};
  std::array<std::size_t, kNumUtilities> util_count{};
  for (int c = 0; c < kNumCategories; ++c) {
    const std::size_t take = std::min(cap, by_cat[c].size());
    kept[c].assign(by_cat[c].begin(), by_cat[c].begin() + take);
    for (const Instance* p : kept[c]) {
      ++tier_count[index(p->gold)];
      ++util_count[index(p->utility)];
    }
  }

  auto is_kept = [&](const Instance* p) {
    const auto& k = kept[index(p->category)];
    return std::find(k.begin(), k.end(), p) != k.end();
  };
  // Swap in a dropped instance matching `want`; evict a kept instance of the
  // same category whose tier and utility stay covered, else grow past the cap.
  auto restore = [&](auto&& want) {
    for (const Instance* cand : filtered) {
      if (!want(cand) || is_kept(cand)) continue;
      auto& k = kept[index(cand->category)];
      for (auto it = k.rbegin(); it != k.rend(); ++it) {
        const Instance* v = *it;
        if (tier_count[index(v->gold)] > 1 && util_count[index(v->utility)] > 1 &&
            !want(v)) {
          --tier_count[index(v->gold)];
          --util_count[index(v->utility)];
          k.erase(std::next(it).base());
          break;
        }
      }
      k.push_back(cand);
      ++tier_count[index(cand->gold)];
      ++util_count[index(cand->utility)];
      return;
    }
  };

  for (int t = 0; t < kLabelVocab; ++t) {
    const bool present = std::any_of(filtered.begin(), filtered.end(),
                                     [&](const Instance* p) { return index(p->gold) == t; });
    if (present && tier_count[t] == 0)
      restore([&](const Instance* p) { return index(p->gold) == t; });
  }
  for (int u = 0; u < kNumUtilities; ++u) {
    const bool present = std::any_of(filtered.begin(), filtered.end(),
                                     [&](const Instance* p) { return index(p->utility) == u; });
    if (present && util_count[u] == 0)
      restore([&](const Instance* p) { return index(p->utility) == u; });
  }

  std::vector<Instance> pool;
  for (const auto& k : kept)
    for (const Instance* p : k) pool.push_back(*p);
  std::sort(pool.begin(), pool.end(),
            [](const Instance& a, const Instance& b) { return a.id < b.id; });
  return pool;
}

std::size_t UncertaintyReport::occupied() const {
  return static_cast<std::size_t>(std::count_if(
      buckets.begin(), buckets.end(), [](const auto& b) { return b.count > 0; }));
}

UncertaintyReport uncertainty_report(std::span<const ScoreRecord> scores) {
  UncertaintyReport r;
  std::array<double, kConfidenceBuckets> conf_sum{};
  std::array<std::size_t, kConfidenceBuckets> errors{};
  std::size_t total_errors = 0;
  for (const auto& s : scores) {
    const int b = bucket_of(s.confidence);
    ++r.buckets[b].count;
    conf_sum[b] += s.confidence;
    if (s.predicted != s.gold) {
      ++errors[b];
      ++total_errors;
    }
  }
  r.total = scores.size();
  r.global_error_rate =
      r.total ? static_cast<double>(total_errors) / static_cast<double>(r.total) : 0.0;

  double prev = 2.0;
  for (int b = 0; b < kConfidenceBuckets; ++b) {
    auto& bucket = r.buckets[b];
    bucket.lower = b / static_cast<double>(kConfidenceBuckets);
    bucket.upper = (b + 1) / static_cast<double>(kConfidenceBuckets);
    if (bucket.count == 0) continue;
    const double n = static_cast<double>(bucket.count);
    bucket.mean_confidence = conf_sum[b] / n;
    bucket.error_rate = static_cast<double>(errors[b]) / n;
    if (bucket.error_rate > prev) r.monotone = false;
    prev = bucket.error_rate;
  }
  return r;
}

}  // namespace ctxgate
