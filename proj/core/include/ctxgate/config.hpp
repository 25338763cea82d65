#ifndef CTXGATE_CONFIG_HPP_
#define CTXGATE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "ctxgate/dpo.hpp"
#include "ctxgate/env.hpp"
#include "ctxgate/grpo.hpp"
#include "ctxgate/pool.hpp"
#include "ctxgate/sft.hpp"

namespace ctxgate {

// Flat "section.key" -> value map. std::map keeps keys sorted, which makes
// the serialised form canonical.
using KeyValues = std::map<std::string, std::string>;

struct ModelConfig {
  std::uint32_t hidden = 32;
  std::uint32_t embed = 4;
  double init_scale = 1.0;
};

struct SplitConfig {
  std::size_t n_train = 4000;
  std::size_t n_test = 4000;
  // Held-out candidates scored by the SFT model to build the RL pool.
  std::size_t n_pool = 4000;
};

struct RunConfig {
  std::string out_dir;
  std::uint64_t seed = 0;
};

struct SuiteOptions {
  int n_seeds = 5;
  // q_mislead of the high-noise context on/off ablation; none skips it.
  std::optional<double> high_noise_q = 0.5;
  bool top3_ablation = true;
};

struct EvalOptions {
  // Checkpoint file name inside out_dir.
  std::string checkpoint = "grpo.ckpt";
  std::string variant = "both";  // NO_CONTEXT, WITH_CONTEXT or both
};

struct GrpoStageOptions {
  std::string init = "sft.ckpt";  // checkpoint file name inside out_dir
  GrpoAlgorithm algorithm = GrpoAlgorithm::kDualGroup;
};

// Every knob of the pipeline. Per-stage seeds are derived from run.seed.
struct PipelineConfig {
  RunConfig run;
  TaskConfig task;
  SplitConfig data;
  ModelConfig model;
  SftConfig sft;
  PoolConfig pool;
  PairConfig pairs;
  DpoConfig dpo;
  GrpoConfig grpo;
  GrpoStageOptions grpo_stage;
  EvalOptions eval;
  SuiteOptions suite;

  Architecture architecture(const TaskConfig& task_config) const {
    return architecture_for(task_config, model.hidden, model.embed);
  }
};

// Parses an INI file ([section] headers, key = value lines, ';' comments).
KeyValues read_ini(const std::filesystem::path& path);

// Applies values onto `config`. Unknown keys and malformed values throw
// ConfigError naming the key. Required keys listed in `required` must be
// present.
void apply_config(const KeyValues& values, PipelineConfig& config,
                  const std::set<std::string>& required = {});

// Canonical dump of every key (defaults included).
KeyValues dump_config(const PipelineConfig& config);

std::string format_config(const KeyValues& values);

// Same values as an INI file that read_ini accepts.
std::string format_ini(const KeyValues& values);

// FNV-1a over the canonical "key=value\n" text, excluding run.out_dir.
std::uint64_t config_hash(const KeyValues& values);

}  // namespace ctxgate

#endif  // CTXGATE_CONFIG_HPP_
