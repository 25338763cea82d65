#ifndef CTXGATE_ARTIFACTS_HPP_
#define CTXGATE_ARTIFACTS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ctxgate/dpo.hpp"
#include "ctxgate/env.hpp"
#include "ctxgate/grpo.hpp"
#include "ctxgate/record.hpp"
#include "ctxgate/sft.hpp"

namespace ctxgate {

// Provenance attached to every file written by a run.
struct ArtifactStamp {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

inline constexpr int kDatasetFormatVersion = 1;

// Dataset record, fields in this order:
//   id category gold ambiguity utility top_chunk query item context
// gold is the tier 1..4; feature blocks are comma-separated hex floats.
Record instance_record(const Instance& inst);
Instance instance_from_record(const Record& record);

// Writes `path` (one record per line) and `path`.header (format version,
// record count, stamp and every task.* generation parameter).
void write_dataset(const std::filesystem::path& path,
                   std::span<const Instance> instances, const TaskConfig& task,
                   const ArtifactStamp& stamp);

struct DatasetFile {
  std::vector<Instance> instances;
  TaskConfig task;
  ArtifactStamp stamp;
};

DatasetFile read_dataset(const std::filesystem::path& path);

std::filesystem::path header_path(const std::filesystem::path& dataset);

// Scoring file: stamp line, then id predicted confidence gold per line.
void write_scores(const std::filesystem::path& path,
                  std::span<const ScoreRecord> scores, const ArtifactStamp& stamp);
std::vector<ScoreRecord> read_scores(const std::filesystem::path& path);

struct PoolFile {
  double threshold = 0.0;
  std::uint64_t seed = 0;
  ArtifactStamp stamp;
  std::vector<std::int64_t> ids;
};

// Pool file: a threshold/seed/stamp line, then one id=... line per member.
void write_pool(const std::filesystem::path& path, std::span<const Instance> pool,
                double threshold, std::uint64_t pool_seed, const ArtifactStamp& stamp);
PoolFile read_pool(const std::filesystem::path& path);

// Selects instances whose ids are listed, in file order.
std::vector<Instance> select_ids(std::span<const Instance> dataset,
                                 std::span<const std::int64_t> ids);

// Pairs file: the instance record followed by chosen=u,l rejected=u,l.
void write_pairs(const std::filesystem::path& path,
                 std::span<const PreferencePair> pairs,
                 std::span<const Instance> source, const ArtifactStamp& stamp);
std::vector<PreferencePair> read_pairs(const std::filesystem::path& path);

// <checkpoint>.meta with the stamp and the producing stage.
void write_checkpoint_meta(const std::filesystem::path& checkpoint,
                           const std::string& stage, const ArtifactStamp& stamp);

Record step_record(const StepMetrics& m);

// One record per line. Reading skips blank lines and '#' comments.
void write_records(const std::filesystem::path& path, std::span<const Record> records);
std::vector<Record> read_records(const std::filesystem::path& path);

// Stamp line written at the top of line-record files.
Record stamp_record(const ArtifactStamp& stamp);

}  // namespace ctxgate

#endif  // CTXGATE_ARTIFACTS_HPP_
