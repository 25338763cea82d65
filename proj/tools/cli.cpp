#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ctxgate/artifacts.hpp"
#include "ctxgate/checkpoint.hpp"
#include "ctxgate/config.hpp"
#include "ctxgate/metrics.hpp"
#include "ctxgate/pool.hpp"
#include "ctxgate/rng.hpp"
#include "ctxgate/suite.hpp"

namespace ctxgate::cli {

namespace fs = std::filesystem;

namespace {

// File names inside the output directory.
constexpr const char* kTrain = "train.data";
constexpr const char* kPoolCandidates = "pool.data";
constexpr const char* kTest = "test.data";
constexpr const char* kScores = "scores.txt";
constexpr const char* kUncertainty = "uncertainty.txt";
constexpr const char* kRlPool = "rl_pool.txt";
constexpr const char* kPairs = "pairs.txt";
constexpr const char* kSuiteRecords = "suite.records";
constexpr const char* kReport = "report.txt";
constexpr const char* kSeries = "series.txt";

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
  bool verbose = false;
};

// Resolved configuration of one invocation.
struct Context {
  PipelineConfig config;
  fs::path dir;
  ArtifactStamp stamp;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  bool verbose = false;

  fs::path at(const std::string& name) const { return dir / name; }
  // Stage seeds fanned out from run.seed.
  PipelineConfig staged() const { return with_stage_seeds(config, config.run.seed); }
};

Context resolve(const Options& o, const std::string& stage, std::ostream& out,
                std::ostream& err) {
  KeyValues values = read_ini(o.config);
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    values[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  Context c;
  apply_config(values, c.config);
  if (o.seed) c.config.run.seed = *o.seed;
  if (o.out) c.config.run.out_dir = *o.out;
  if (c.config.run.out_dir.empty())
    throw ConfigError("missing config key 'run.out_dir' (or pass --out)");
  c.config.task.validate();
  c.config.grpo.validate();

  const KeyValues resolved = dump_config(c.config);
  c.dir = c.config.run.out_dir;
  c.stamp = {config_hash(resolved), c.config.run.seed};
  c.out = &out;
  c.err = &err;
  c.verbose = o.verbose;

  fs::create_directories(c.dir);
  std::ofstream cfg(c.at(stage + ".config"), std::ios::binary | std::ios::trunc);
  if (!cfg) throw ConfigError("cannot write " + c.at(stage + ".config").string());
  cfg << "; config_hash = " << hex64(c.stamp.config_hash) << '\n' << format_ini(resolved);
  return c;
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("input not found: " + p.string());
}

Checkpoint load(const fs::path& p) {
  require_file(p);
  return load_checkpoint(p);
}

void save(const Context& c, const fs::path& p, const std::string& stage, const Policy& policy,
          const AdamState* optimizer = nullptr) {
  save_checkpoint(p, policy, optimizer);
  write_checkpoint_meta(p, stage, c.stamp);
}

std::vector<Record> stamped(const ArtifactStamp& stamp, std::vector<Record> body) {
  body.insert(body.begin(), stamp_record(stamp));
  return body;
}

std::vector<Instance> rl_pool_instances(const Context& c) {
  const PoolFile pool = read_pool(c.at(kRlPool));
  const DatasetFile candidates = read_dataset(c.at(kPoolCandidates));
  return select_ids(candidates.instances, pool.ids);
}

std::string sft_checkpoint_name(PromptVariant v) {
  return v == PromptVariant::kWithContext ? "sft.ckpt" : "sft_only.ckpt";
}

// --- subcommands ---------------------------------------------------------

void gen_data(const Context& c) {
  const std::uint64_t seed = c.config.run.seed;
  const Splits s = make_splits(c.config.task, c.config.data, seed);
  auto write = [&](const char* name, std::string_view sub, const std::vector<Instance>& data) {
    TaskConfig t = c.config.task;
    t.seed = derive_seed(seed, sub);
    t.n_instances = data.size();
    write_dataset(c.at(name), data, t, c.stamp);
  };
  write(kTrain, "data.train", s.train);
  write(kPoolCandidates, "data.pool", s.pool);
  write(kTest, "data.test", s.test);
  *c.out << fmt::format("gen-data: train={} pool={} test={} -> {} (config {}, seed {})\n",
                        s.train.size(), s.pool.size(), s.test.size(), c.dir.string(),
                        hex64(c.stamp.config_hash), seed);
}

void sft(const Context& c) {
  const PipelineConfig cfg = c.staged();
  const DatasetFile train = read_dataset(c.at(kTrain));
  const Policy init = Policy::random(cfg.architecture(train.task), init_seed(cfg.run.seed),
                                     cfg.model.init_scale);
  SftHistory history;
  const Policy trained = sft_train(init, train.instances, cfg.sft, &history);
  const std::string name = sft_checkpoint_name(cfg.sft.variant);
  save(c, c.at(name), "sft", trained);

  std::vector<Record> rows;
  for (std::size_t e = 0; e < history.epoch_loss.size(); ++e) {
    Record r;
    r.add("kind", std::string("sft")).add("epoch", static_cast<std::uint64_t>(e))
        .add("loss", history.epoch_loss[e]);
    rows.push_back(std::move(r));
  }
  write_records(c.at(name + ".metrics"), stamped(c.stamp, std::move(rows)));
  *c.out << fmt::format("sft: {} on {} examples, loss {:.4f} -> {:.4f}, wrote {}\n",
                        to_string(cfg.sft.variant), train.instances.size(),
                        history.epoch_loss.front(), history.epoch_loss.back(),
                        c.at(name).string());
}

void filter(const Context& c) {
  const PipelineConfig cfg = c.staged();
  const Checkpoint model = load(c.at("sft.ckpt"));
  const DatasetFile candidates = read_dataset(c.at(kPoolCandidates));
  const std::vector<ScoreRecord> scores =
      score_dataset(model.policy, candidates.instances, PromptVariant::kWithContext);
  write_scores(c.at(kScores), scores, c.stamp);

  const UncertaintyReport unc = uncertainty_report(scores);
  std::vector<Record> rows;
  for (const UncertaintyBucket& b : unc.buckets) {
    Record r;
    r.add("kind", std::string("bucket")).add("lower", b.lower).add("upper", b.upper)
        .add("count", static_cast<std::uint64_t>(b.count))
        .add("mean_confidence", b.mean_confidence).add("error_rate", b.error_rate);
    rows.push_back(std::move(r));
  }
  Record total;
  total.add("kind", std::string("total")).add("count", static_cast<std::uint64_t>(unc.total))
      .add("global_error", unc.global_error_rate).add("monotone", unc.monotone ? 1 : 0);
  rows.push_back(std::move(total));
  write_records(c.at(kUncertainty), stamped(c.stamp, std::move(rows)));

  const std::vector<Instance> pool = build_rl_pool(scores, candidates.instances, cfg.pool);
  write_pool(c.at(kRlPool), pool, cfg.pool.threshold, cfg.pool.seed, c.stamp);
  *c.out << fmt::format(
      "filter: kept {} of {} candidates below confidence {}, global error {:.4f}, {}\n",
      pool.size(), scores.size(), cfg.pool.threshold, unc.global_error_rate,
      unc.monotone ? "monotone" : "not monotone");
}

void dpo(const Context& c) {
  const PipelineConfig cfg = c.staged();
  const Checkpoint ref = load(c.at("sft.ckpt"));
  const std::vector<Instance> pool = rl_pool_instances(c);
  const std::vector<PreferencePair> pairs = build_preference_pairs(ref.policy, pool, cfg.pairs);
  write_pairs(c.at(kPairs), pairs, pool, c.stamp);
  DpoHistory history;
  const Policy trained = dpo_train(ref.policy, ref.policy, pairs, cfg.dpo, &history);
  save(c, c.at("dpo.ckpt"), "dpo", trained);

  std::vector<Record> rows;
  for (std::size_t e = 0; e < history.mean_margin.size(); ++e) {
    Record r;
    r.add("kind", std::string("dpo")).add("epoch", static_cast<std::uint64_t>(e))
        .add("mean_margin", history.mean_margin[e]);
    rows.push_back(std::move(r));
  }
  write_records(c.at("dpo.ckpt.metrics"), stamped(c.stamp, std::move(rows)));
  const double last = history.mean_margin.empty() ? 0.0 : history.mean_margin.back();
  *c.out << fmt::format("dpo: {} pairs from {} pool instances, final mean margin {:.4f}\n",
                        pairs.size(), pool.size(), last);
}

void grpo(const Context& c) {
  const PipelineConfig cfg = c.staged();
  const Checkpoint init = load(c.at(cfg.grpo_stage.init));
  const std::vector<Instance> pool = rl_pool_instances(c);
  std::vector<Record> rows;
  const GrpoRun run = train_grpo(init.policy, pool, cfg.grpo, cfg.grpo_stage.algorithm,
                                 [&](const StepMetrics& m) {
                                   Record r;
                                   r.add("kind", std::string("step"));
                                   const Record fields = step_record(m);
                                   for (const auto& [k, v] : fields.fields()) r.add(k, v);
                                   rows.push_back(std::move(r));
                                   if (c.verbose) *c.err << r.str() << '\n';
                                 });
  save(c, c.at("grpo.ckpt"), "grpo", run.policy, &run.optimizer);
  write_records(c.at("grpo.steps"), stamped(c.stamp, std::move(rows)));
  std::string tail = "no steps";
  if (!run.metrics.empty()) {
    const StepMetrics& m = run.metrics.back();
    tail = fmt::format("last step return no_ctx {:.3f} with_ctx {:.3f}, alpha {:.3f}, "
                       "beta {:.3f}, kl {:.5f}",
                       m.mean_return_no_ctx, m.mean_return_with_ctx, m.alpha, m.beta, m.kl);
  }
  *c.out << fmt::format("grpo: {} from {}, {} steps on {} pool instances, {}\n",
                        to_string(cfg.grpo_stage.algorithm), cfg.grpo_stage.init,
                        run.metrics.size(), pool.size(), tail);
}

void eval(const Context& c) {
  const std::string& name = c.config.eval.checkpoint;
  const Checkpoint model = load(c.at(name));
  const DatasetFile test = read_dataset(c.at(kTest));
  std::vector<PromptVariant> variants;
  if (c.config.eval.variant == "both")
    variants = {PromptVariant::kNoContext, PromptVariant::kWithContext};
  else
    variants = {parse_variant(c.config.eval.variant)};

  std::vector<Record> rows;
  std::string summary;
  for (PromptVariant v : variants) {
    const MetricsReport report = evaluate(model.policy, test.instances, v);
    rows.push_back(eval_record(c.config.run.seed, fs::path(name).stem().string(), report));
    summary += fmt::format("{}{} accuracy {:.2f} macro-F1 {:.2f} adopt {:.1f}%",
                           summary.empty() ? "" : "; ", to_string(v), report.overall.accuracy,
                           report.overall.macro_f1, report.usage.adopt_rate());
  }
  write_records(c.at(name + ".eval"), stamped(c.stamp, std::move(rows)));
  *c.out << fmt::format("eval {}: {}\n", name, summary);
}

void suite(const Context& c) {
  ProgressSink progress;
  if (c.verbose) progress = [&](const std::string& msg) { *c.err << msg << '\n'; };
  const std::vector<Record> records = run_suite(c.config, progress);
  write_records(c.at(kSuiteRecords), stamped(c.stamp, records));
  const std::string report = render_report(records);
  {
    std::ofstream f(c.at(kReport), std::ios::binary | std::ios::trunc);
    f << report;
  }
  {
    std::ofstream f(c.at(kSeries), std::ios::binary | std::ios::trunc);
    f << render_series(records);
  }
  const double dual = mean_metric(records, "dual_sft", PromptVariant::kWithContext, "accuracy");
  const double rag = mean_metric(records, "rag_sft", PromptVariant::kWithContext, "accuracy");
  *c.out << fmt::format("suite: {} seeds, dual-group accuracy {:.2f} vs RAG-SFT {:.2f}, wrote {}\n",
                        c.config.suite.n_seeds, dual, rag, c.at(kReport).string());
}

void report(const Context& c) {
  require_file(c.at(kSuiteRecords));
  const std::vector<Record> records = read_records(c.at(kSuiteRecords));
  std::size_t evals = 0;
  for (const Record& r : records) evals += r.has("kind") && r.get("kind") == "eval";
  if (evals == 0) throw ConfigError(c.at(kSuiteRecords).string() + ": no eval records");
  std::ofstream f(c.at(kReport), std::ios::binary | std::ios::trunc);
  f << render_report(records);
  *c.out << fmt::format("report: {} eval records -> {}\n", evals, c.at(kReport).string());
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-gated relevance training pipeline", "ctxgate"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    void (*fn)(const Context&);
  };
  static constexpr Command kCommands[] = {
      {"gen-data", "generate train/pool/test datasets", gen_data},
      {"sft", "supervised fine-tuning from a random init", sft},
      {"filter", "score the pool split and build the RL pool", filter},
      {"dpo", "build preference pairs and train DPO from the SFT model", dpo},
      {"grpo", "GRPO training (dual-group or vanilla) on the RL pool", grpo},
      {"eval", "evaluate a checkpoint on the test split", eval},
      {"suite", "full multi-seed comparison with report", suite},
      {"report", "re-render the report from suite records", report},
  };

  Options opts;
  const Command* chosen = nullptr;
  for (const Command& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("-c,--config", opts.config, "INI config file")->required();
    sub->add_option("--seed", opts.seed, "overrides run.seed");
    sub->add_option("-o,--out", opts.out, "overrides run.out_dir");
    sub->add_option("--set", opts.overrides, "extra key=value override (repeatable)");
    sub->add_flag("-v,--verbose", opts.verbose, "progress on stderr");
    sub->callback([&chosen, &cmd] { chosen = &cmd; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const Context c = resolve(opts, chosen->name, out, err);
    chosen->fn(c);
  } catch (const EmptyPoolError& e) {
    std::string hist;
    for (std::size_t n : e.histogram()) hist += (hist.empty() ? "" : ",") + std::to_string(n);
    err << "error: " << e.what() << " (confidence deciles: " << hist << ")\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ctxgate::cli
