#ifndef CTXGATE_SUITE_HPP_
#define CTXGATE_SUITE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxgate/config.hpp"
#include "ctxgate/env.hpp"
#include "ctxgate/metrics.hpp"
#include "ctxgate/record.hpp"

namespace ctxgate {

// Id offsets keep the three splits disjoint.
inline constexpr std::int64_t kPoolIdBase = 1'000'000;
inline constexpr std::int64_t kTestIdBase = 2'000'000;

struct Splits {
  std::vector<Instance> train;
  std::vector<Instance> pool;
  std::vector<Instance> test;
};

// Each split draws from its own sub-seed of `seed`; `task` supplies every
// other generation parameter.
Splits make_splits(const TaskConfig& task, const SplitConfig& sizes, std::uint64_t seed);

// Fills every stage seed (sft, pool, pairs, dpo, grpo) from `seed`.
PipelineConfig with_stage_seeds(PipelineConfig config, std::uint64_t seed);

// Seed of the initial policy; shared by every model of one pipeline seed.
std::uint64_t init_seed(std::uint64_t seed);

// Model rows produced for every seed.
struct SuiteRow {
  std::string_view key;
  std::string_view title;
  // Prompt variant the row is reported under in the main tables.
  PromptVariant natural;
};

inline constexpr SuiteRow kSuiteRows[] = {
    {"sft_only", "SFT-only", PromptVariant::kNoContext},
    {"rag_sft", "RAG-SFT", PromptVariant::kWithContext},
    {"rag_dpo", "RAG-DPO", PromptVariant::kWithContext},
    {"grpo_vanilla", "GRPO (RAG-SFT base)", PromptVariant::kWithContext},
    {"dual_sft", "dual-group GRPO (SFT base)", PromptVariant::kWithContext},
    {"dual_dpo", "dual-group GRPO (DPO base)", PromptVariant::kWithContext},
    {"dual_fixed", "dual-group GRPO, fixed gating", PromptVariant::kWithContext},
    {"dual_label_gated", "dual-group GRPO, label gating", PromptVariant::kWithContext},
    {"rag_sft_top3", "RAG-SFT, top-3 chunks", PromptVariant::kWithContext},
    {"rag_sft_noisy", "RAG-SFT, high noise", PromptVariant::kWithContext},
    {"dual_sft_noisy", "dual-group GRPO (SFT base), high noise", PromptVariant::kWithContext},
    {"dual_dpo_noisy", "dual-group GRPO (DPO base), high noise", PromptVariant::kWithContext},
};

const SuiteRow& suite_row(std::string_view key);

// kind=eval line for one model under one prompt variant.
Record eval_record(std::uint64_t seed, std::string_view row, const MetricsReport& report);

using ProgressSink = std::function<void(const std::string&)>;

// Trains and evaluates every row for config.suite.n_seeds seeds fanned out
// from config.run.seed. Records are returned in a fixed order: per seed,
// a pool line, the eval lines, then step lines for every GRPO run.
std::vector<Record> run_suite(const PipelineConfig& config,
                              const ProgressSink& progress = {});

// One seed of the suite; `seed` is already the per-seed value.
std::vector<Record> run_seed(const PipelineConfig& config, std::uint64_t seed,
                             const ProgressSink& progress = {});

// Mean over seeds of `metric` (an eval-record field) for row/variant.
// Throws ConfigError when no record matches.
double mean_metric(std::span<const Record> records, std::string_view row,
                   PromptVariant variant, std::string_view metric);

// Values over seeds, in record order.
std::vector<double> metric_values(std::span<const Record> records, std::string_view row,
                                  PromptVariant variant, std::string_view metric);

// Aligned plain-text tables built from eval and pool records.
std::string render_report(std::span<const Record> records);

// Per-seed series (step vs metric) of the GRPO runs, one record per line.
std::string render_series(std::span<const Record> records);

}  // namespace ctxgate

#endif  // CTXGATE_SUITE_HPP_
