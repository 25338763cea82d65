#include "ctxgate/suite.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "ctxgate/artifacts.hpp"
#include "ctxgate/dpo.hpp"
#include "ctxgate/grpo.hpp"
#include "ctxgate/pool.hpp"
#include "ctxgate/rng.hpp"
#include "ctxgate/sft.hpp"

namespace ctxgate {

Splits make_splits(const TaskConfig& task, const SplitConfig& sizes, std::uint64_t seed) {
  auto split = [&](std::string_view name, std::size_t n, std::int64_t first_id) {
    TaskConfig t = task;
    t.n_instances = n;
    t.seed = derive_seed(seed, name);
    return generate_dataset(t, first_id);
  };
  return {split("data.train", sizes.n_train, 0), split("data.pool", sizes.n_pool, kPoolIdBase),
          split("data.test", sizes.n_test, kTestIdBase)};
}

PipelineConfig with_stage_seeds(PipelineConfig config, std::uint64_t seed) {
  config.sft.seed = derive_seed(seed, "sft");
  config.pool.seed = derive_seed(seed, "pool");
  config.pairs.seed = derive_seed(seed, "pairs");
  config.dpo.seed = derive_seed(seed, "dpo");
  config.grpo.seed = derive_seed(seed, "grpo");
  return config;
}

std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, "init"); }

const SuiteRow& suite_row(std::string_view key) {
  for (const SuiteRow& row : kSuiteRows)
    if (row.key == key) return row;
  throw ConfigError("unknown suite row '" + std::string(key) + "'");
}

Record eval_record(std::uint64_t seed, std::string_view row, const MetricsReport& report) {
  Record r;
  r.add("kind", std::string("eval"))
      .add("seed", seed)
      .add("row", std::string(row))
      .add("variant", std::string(to_string(report.variant)))
      .add("n", static_cast<std::uint64_t>(report.overall.total))
      .add("accuracy", report.overall.accuracy)
      .add("macro_f1", report.overall.macro_f1);
  for (int k = 0; k < kLabelVocab; ++k)
    r.add("f1_" + std::to_string(k + 1), report.overall.f1[k]);
  r.add("adopt", report.usage.adopt_rate());
  for (Utility u : kAllUtilities)
    r.add("adopt_" + std::string(to_string(u)), report.usage.adopt_rate(u));
  for (Category c : kAllCategories)
    r.add("macro_f1_" + std::string(to_string(c)), report.by_category[index(c)].macro_f1);
  std::string cm;
  for (int g = 0; g < kLabelVocab; ++g)
    for (int p = 0; p < kLabelVocab; ++p)
      cm += (cm.empty() ? "" : ",") + std::to_string(report.overall.confusion[g][p]);
  r.add("cm", cm);
  return r;
}

namespace {

struct SeedRun {
  const PipelineConfig& config;
  std::uint64_t seed;
  const ProgressSink& progress;
  std::vector<Record> evals;
  std::vector<Record> steps;

  void note(const std::string& msg) const {
    if (progress) progress(fmt::format("seed {}: {}", seed, msg));
  }

  void evaluate_row(std::string_view row, const Policy& policy,
                    std::span<const Instance> test) {
    for (PromptVariant v : {PromptVariant::kNoContext, PromptVariant::kWithContext})
      evals.push_back(eval_record(seed, row, evaluate(policy, test, v)));
  }

  Policy grpo(std::string_view row, const Policy& init, std::span<const Instance> pool,
              GrpoConfig grpo_config, GrpoAlgorithm algorithm) {
    note(fmt::format("training {}", row));
    if (grpo_config.steps == 0) return init;
    const GrpoRun run = train_grpo(init, pool, grpo_config, algorithm, [&](const StepMetrics& m) {
      Record r;
      r.add("kind", std::string("step")).add("seed", seed).add("row", std::string(row));
      const Record fields = step_record(m);
      for (const auto& [k, v] : fields.fields()) r.add(k, v);
      steps.push_back(std::move(r));
    });
    return run.policy;
  }
};

// Trains RAG-SFT on `task` data and returns it with its splits.
struct SftStage {
  Splits splits;
  Policy init;
  Policy rag_sft;
};

SftStage rag_sft_stage(const PipelineConfig& config, const TaskConfig& task,
                       std::uint64_t seed) {
  SftStage s{make_splits(task, config.data, seed),
             Policy::random(config.architecture(task), init_seed(seed),
                            config.model.init_scale),
             Policy(config.architecture(task))};
  SftConfig sft = config.sft;
  sft.variant = PromptVariant::kWithContext;
  s.rag_sft = sft_train(s.init, s.splits.train, sft);
  return s;
}

std::vector<Instance> rl_pool(const PipelineConfig& config, const Policy& rag_sft,
                              std::span<const Instance> candidates) {
  const std::vector<ScoreRecord> scores =
      score_dataset(rag_sft, candidates, PromptVariant::kWithContext);
  return build_rl_pool(scores, candidates, config.pool);
}

}  // namespace

std::vector<Record> run_seed(const PipelineConfig& base, std::uint64_t seed,
                             const ProgressSink& progress) {
  const PipelineConfig config = with_stage_seeds(base, seed);
  SeedRun run{config, seed, progress, {}, {}};
  std::vector<Record> out;

  // Default setting: every main row plus the gating ablation.
  run.note("supervised fine-tuning");
  const SftStage main = rag_sft_stage(config, config.task, seed);
  SftConfig sft_only = config.sft;
  sft_only.variant = PromptVariant::kNoContext;
  run.evaluate_row("sft_only", sft_train(main.init, main.splits.train, sft_only),
                   main.splits.test);
  run.evaluate_row("rag_sft", main.rag_sft, main.splits.test);

  const std::vector<ScoreRecord> scores =
      score_dataset(main.rag_sft, main.splits.pool, PromptVariant::kWithContext);
  const std::vector<Instance> pool = build_rl_pool(scores, main.splits.pool, config.pool);
  const UncertaintyReport unc = uncertainty_report(scores);
  {
    Record r;
    r.add("kind", std::string("pool"))
        .add("seed", seed)
        .add("candidates", static_cast<std::uint64_t>(scores.size()))
        .add("size", static_cast<std::uint64_t>(pool.size()))
        .add("threshold", config.pool.threshold)
        .add("global_error", unc.global_error_rate)
        .add("monotone", unc.monotone ? 1 : 0);
    out.push_back(std::move(r));
  }

  run.note("preference optimisation");
  const std::vector<PreferencePair> pairs = build_preference_pairs(main.rag_sft, pool, config.pairs);
  const Policy rag_dpo = dpo_train(main.rag_sft, main.rag_sft, pairs, config.dpo);
  run.evaluate_row("rag_dpo", rag_dpo, main.splits.test);

  run.evaluate_row("grpo_vanilla",
                   run.grpo("grpo_vanilla", main.rag_sft, pool, config.grpo,
                            GrpoAlgorithm::kVanilla),
                   main.splits.test);
  run.evaluate_row("dual_sft",
                   run.grpo("dual_sft", main.rag_sft, pool, config.grpo,
                            GrpoAlgorithm::kDualGroup),
                   main.splits.test);
  run.evaluate_row("dual_dpo",
                   run.grpo("dual_dpo", rag_dpo, pool, config.grpo, GrpoAlgorithm::kDualGroup),
                   main.splits.test);

  GrpoConfig fixed = config.grpo;
  fixed.scaling = ScalingMode::kFixed;
  run.evaluate_row("dual_fixed",
                   run.grpo("dual_fixed", main.rag_sft, pool, fixed, GrpoAlgorithm::kDualGroup),
                   main.splits.test);
  GrpoConfig gated = config.grpo;
  gated.scaling = ScalingMode::kLabelGated;
  run.evaluate_row("dual_label_gated",
                   run.grpo("dual_label_gated", main.rag_sft, pool, gated,
                            GrpoAlgorithm::kDualGroup),
                   main.splits.test);

  if (config.suite.top3_ablation) {
    run.note("top-3 chunk ablation");
    TaskConfig top3 = config.task;
    top3.n_chunks = 3;
    const SftStage s = rag_sft_stage(config, top3, seed);
    run.evaluate_row("rag_sft_top3", s.rag_sft, s.splits.test);
  }

  if (config.suite.high_noise_q) {
    run.note("high-noise ablation");
    TaskConfig noisy = config.task;
    noisy.q_mislead = *config.suite.high_noise_q;
    const SftStage s = rag_sft_stage(config, noisy, seed);
    run.evaluate_row("rag_sft_noisy", s.rag_sft, s.splits.test);
    const std::vector<Instance> noisy_pool = rl_pool(config, s.rag_sft, s.splits.pool);
    run.evaluate_row("dual_sft_noisy",
                     run.grpo("dual_sft_noisy", s.rag_sft, noisy_pool, config.grpo,
                              GrpoAlgorithm::kDualGroup),
                     s.splits.test);
    const std::vector<PreferencePair> noisy_pairs =
        build_preference_pairs(s.rag_sft, noisy_pool, config.pairs);
    const Policy noisy_dpo = dpo_train(s.rag_sft, s.rag_sft, noisy_pairs, config.dpo);
    run.evaluate_row("dual_dpo_noisy",
                     run.grpo("dual_dpo_noisy", noisy_dpo, noisy_pool, config.grpo,
                              GrpoAlgorithm::kDualGroup),
                     s.splits.test);
  }

  for (Record& r : run.evals) out.push_back(std::move(r));
  for (Record& r : run.steps) out.push_back(std::move(r));
  return out;
}

std::vector<Record> run_suite(const PipelineConfig& config, const ProgressSink& progress) {
  if (config.suite.n_seeds < 1) throw ConfigError("suite.n_seeds must be at least 1");
  config.task.validate();
  config.grpo.validate();
  std::vector<Record> out;
  for (int i = 0; i < config.suite.n_seeds; ++i) {
    const std::uint64_t seed = derive_seed(config.run.seed, static_cast<std::uint64_t>(i));
    std::vector<Record> part = run_seed(config, seed, progress);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<double> metric_values(std::span<const Record> records, std::string_view row,
                                  PromptVariant variant, std::string_view metric) {
  std::vector<double> out;
  const std::string_view v = to_string(variant);
  for (const Record& r : records)
    if (r.has("kind") && r.get("kind") == "eval" && r.get("row") == row &&
        r.get("variant") == v)
      out.push_back(r.get_double(metric));
  return out;
}

double mean_metric(std::span<const Record> records, std::string_view row,
                   PromptVariant variant, std::string_view metric) {
  const std::vector<double> values = metric_values(records, row, variant, metric);
  if (values.empty())
    throw ConfigError(fmt::format("no eval records for row '{}' ({})", row, to_string(variant)));
  double sum = 0.0;
  for (double x : values) sum += x;
  return sum / static_cast<double>(values.size());
}

namespace {

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

Summary summarise(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

std::string cell(std::span<const Record> records, std::string_view row, PromptVariant variant,
                 std::string_view metric) {
  const Summary s = summarise(metric_values(records, row, variant, metric));
  if (s.n == 0) return "-";
  if (s.n == 1) return fmt::format("{:.2f}", s.mean);
  return fmt::format("{:.2f} ± {:.2f}", s.mean, s.sd);
}

bool has_row(std::span<const Record> records, std::string_view row) {
  for (const Record& r : records)
    if (r.has("row") && r.get("row") == row) return true;
  return false;
}

// Column widths count code points so that "±" aligns.
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string str() const {
    std::vector<std::size_t> width(rows_[0].size(), 0);
    for (const auto& row : rows_)
      for (std::size_t i = 0; i < row.size(); ++i)
        width[i] = std::max(width[i], display_width(row[i]));
    std::string out;
    auto line = [&](const std::vector<std::string>& row) {
      std::string text;
      for (std::size_t i = 0; i < row.size(); ++i) {
        const std::size_t pad = width[i] - display_width(row[i]);
        if (i == 0) {
          text += row[i] + std::string(pad, ' ');
        } else {
          text += "  " + std::string(pad, ' ') + row[i];
        }
      }
      while (!text.empty() && text.back() == ' ') text.pop_back();
      out += text + "\n";
    };
    line(rows_[0]);
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    for (std::size_t i = 1; i < rows_.size(); ++i) line(rows_[i]);
    return out;
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace

std::string render_report(std::span<const Record> records) {
  std::vector<std::uint64_t> seeds;
  std::vector<const Record*> pools;
  for (const Record& r : records) {
    if (!r.has("kind")) continue;
    if (r.get("kind") == "pool") pools.push_back(&r);
    if (r.get("kind") == "eval") {
      const std::uint64_t s = r.get_uint("seed");
      if (std::find(seeds.begin(), seeds.end(), s) == seeds.end()) seeds.push_back(s);
    }
  }

  std::string out = fmt::format("Evaluation report ({} seed{}; mean ± sd over seeds)\n\n",
                                seeds.size(), seeds.size() == 1 ? "" : "s");

  const std::vector<std::string_view> main_rows = {"sft_only",     "rag_sft",  "rag_dpo",
                                                   "grpo_vanilla", "dual_sft", "dual_dpo"};

  {
    out += "Main comparison (test split, per-class F1 / macro-F1 / accuracy, %)\n";
    Table t({"Model", "L1", "L2", "L3", "L4", "Macro-F1", "Accuracy"});
    for (std::string_view key : main_rows) {
      if (!has_row(records, key)) continue;
      const SuiteRow& row = suite_row(key);
      t.add({std::string(row.title), cell(records, key, row.natural, "f1_1"),
             cell(records, key, row.natural, "f1_2"), cell(records, key, row.natural, "f1_3"),
             cell(records, key, row.natural, "f1_4"), cell(records, key, row.natural, "macro_f1"),
             cell(records, key, row.natural, "accuracy")});
    }
    out += t.str() + "\n";
  }

  if (has_row(records, "rag_sft_top3")) {
    out += "Retrieved chunks (RAG-SFT, equal budget)\n";
    Table t({"Context", "Macro-F1", "Accuracy"});
    const auto w = PromptVariant::kWithContext;
    t.add({"Top-1 chunk", cell(records, "rag_sft", w, "macro_f1"),
           cell(records, "rag_sft", w, "accuracy")});
    t.add({"Top-3 chunks", cell(records, "rag_sft_top3", w, "macro_f1"),
           cell(records, "rag_sft_top3", w, "accuracy")});
    out += t.str() + "\n";
  }

  {
    out += "Context at inference (macro-F1 / accuracy)\n";
    Table t({"Model", "Setting", "Context", "Macro-F1", "Accuracy"});
    auto add = [&](std::string_view key, const std::string& setting) {
      if (!has_row(records, key)) return;
      for (PromptVariant v : {PromptVariant::kNoContext, PromptVariant::kWithContext})
        t.add({std::string(suite_row(key).title), setting,
               v == PromptVariant::kNoContext ? "off" : "on", cell(records, key, v, "macro_f1"),
               cell(records, key, v, "accuracy")});
    };
    add("rag_sft", "default");
    add("dual_sft", "default");
    add("rag_sft_noisy", "high noise");
    add("dual_sft_noisy", "high noise");
    out += t.str() + "\n";
  }

  {
    out += "Gating coefficients (dual-group GRPO, SFT base)\n";
    Table t({"Scaling", "Macro-F1", "Accuracy"});
    const auto w = PromptVariant::kWithContext;
    const std::pair<std::string_view, std::string> gating[] = {
        {"dual_fixed", "fixed (alpha=2, beta=0.05)"},
        {"dual_label_gated", "utility-label gated"},
        {"dual_sft", "posterior (accuracy gap)"}};
    for (const auto& [key, title] : gating)
      if (has_row(records, key))
        t.add({title, cell(records, key, w, "macro_f1"), cell(records, key, w, "accuracy")});
    out += t.str() + "\n";
  }

  {
    out += "Context usage (ADOPT rate %, with context, by latent utility)\n";
    Table t({"Model", "Overall", "ADOPT", "PARTIAL", "IGNORE"});
    const auto w = PromptVariant::kWithContext;
    for (const SuiteRow& row : kSuiteRows) {
      if (row.natural != w || !has_row(records, row.key)) continue;
      t.add({std::string(row.title), cell(records, row.key, w, "adopt"),
             cell(records, row.key, w, "adopt_ADOPT"), cell(records, row.key, w, "adopt_PARTIAL"),
             cell(records, row.key, w, "adopt_IGNORE")});
    }
    out += t.str() + "\n";
  }

  {
    out += "Macro-F1 by query category\n";
    std::vector<std::string> header = {"Model"};
    for (Category c : kAllCategories) header.emplace_back(to_string(c));
    Table t(header);
    for (std::string_view key : main_rows) {
      if (!has_row(records, key)) continue;
      const SuiteRow& row = suite_row(key);
      std::vector<std::string> line = {std::string(row.title)};
      for (Category c : kAllCategories)
        line.push_back(cell(records, key, row.natural, "macro_f1_" + std::string(to_string(c))));
      t.add(line);
    }
    out += t.str() + "\n";
  }

  if (!pools.empty()) {
    out += "RL pool (held-out candidates scored by RAG-SFT)\n";
    Table t({"Seed", "Candidates", "Pool", "Threshold", "SFT error %", "Monotone"});
    for (const Record* r : pools)
      t.add({hex64(r->get_uint("seed")), r->get("candidates"), r->get("size"),
             fmt::format("{:.2f}", r->get_double("threshold")),
             fmt::format("{:.2f}", 100.0 * r->get_double("global_error")),
             r->get_int("monotone") ? "yes" : "no"});
    out += t.str();
  }
  return out;
}

std::string render_series(std::span<const Record> records) {
  std::string out;
  for (const Record& r : records)
    if (r.has("kind") && r.get("kind") == "step") out += r.str() + "\n";
  return out;
}

}  // namespace ctxgate
