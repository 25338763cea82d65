#include "ctxgate/artifacts.hpp"

#include <fstream>
#include <unordered_map>

#include "ctxgate/config.hpp"

namespace ctxgate {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

ArtifactStamp stamp_from(const Record& r) {
  ArtifactStamp s;
  s.config_hash = std::stoull(r.get("config_hash"), nullptr, 16);
  s.seed = r.get_uint("seed");
  return s;
}

std::string format_tokens(const TokenPair& t) {
  return std::to_string(index(t.usage)) + "," + std::to_string(index(t.label));
}

TokenPair parse_tokens(const std::string& s) {
  if (s.size() != 3 || s[1] != ',') throw ConfigError("malformed token pair: " + s);
  return {usage_from_index(s[0] - '0'), label_from_index(s[2] - '0')};
}

}  // namespace

std::vector<Record> read_records(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<Record> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      out.push_back(Record::parse(line));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_records(const std::filesystem::path& path, std::span<const Record> records) {
  std::ofstream out = open_out(path);
  for (const Record& r : records) out << r.str() << '\n';
}

Record stamp_record(const ArtifactStamp& stamp) {
  Record r;
  r.add("config_hash", hex64(stamp.config_hash)).add("seed", stamp.seed);
  return r;
}

Record instance_record(const Instance& inst) {
  Record r;
  r.add("id", inst.id)
      .add("category", std::string(to_string(inst.category)))
      .add("gold", tier(inst.gold))
      .add("ambiguity", std::string(to_string(inst.ambiguity)))
      .add("utility", std::string(to_string(inst.utility)))
      .add("top_chunk", static_cast<std::uint64_t>(inst.top_chunk))
      .add("query", format_hex_list(inst.query))
      .add("item", format_hex_list(inst.item))
      .add("context", format_hex_list(inst.context));
  return r;
}

Instance instance_from_record(const Record& r) {
  Instance inst;
  inst.id = r.get_int("id");
  inst.category = parse_category(r.get("category"));
  inst.gold = label_from_tier(static_cast<int>(r.get_int("gold")));
  inst.ambiguity = parse_ambiguity(r.get("ambiguity"));
  inst.utility = parse_utility(r.get("utility"));
  inst.top_chunk = static_cast<std::uint32_t>(r.get_uint("top_chunk"));
  inst.query = parse_hex_list(r.get("query"));
  inst.item = parse_hex_list(r.get("item"));
  inst.context = parse_hex_list(r.get("context"));
  return inst;
}

std::filesystem::path header_path(const std::filesystem::path& dataset) {
  std::filesystem::path h = dataset;
  h += ".header";
  return h;
}

void write_dataset(const std::filesystem::path& path,
                   std::span<const Instance> instances, const TaskConfig& task,
                   const ArtifactStamp& stamp) {
  {
    std::ofstream out = open_out(path);
    for (const Instance& inst : instances) out << instance_record(inst).str() << '\n';
  }
  PipelineConfig holder;
  holder.task = task;
  std::ofstream header = open_out(header_path(path));
  header << "format_version=" << kDatasetFormatVersion << '\n'
         << "count=" << instances.size() << '\n'
         << "config_hash=" << hex64(stamp.config_hash) << '\n'
         << "seed=" << stamp.seed << '\n'
         << "task.seed=" << task.seed << '\n'
         << "task.n_instances=" << task.n_instances << '\n';
  for (const auto& [key, value] : dump_config(holder))
    if (key.rfind("task.", 0) == 0) header << key << '=' << value << '\n';
}

DatasetFile read_dataset(const std::filesystem::path& path) {
  const std::filesystem::path hp = header_path(path);
  if (!std::filesystem::exists(path))
    throw ConfigError("dataset not found: " + path.string());
  if (!std::filesystem::exists(hp))
    throw ConfigError("dataset header not found: " + hp.string());

  KeyValues header;
  {
    std::ifstream in = open_in(hp);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(hp.string() + ": malformed line " + line);
      header[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  auto take = [&](const std::string& key) {
    const auto it = header.find(key);
    if (it == header.end())
      throw ConfigError(hp.string() + ": missing header key '" + key + "'");
    std::string v = it->second;
    header.erase(it);
    return v;
  };

  DatasetFile file;
  if (std::stoi(take("format_version")) != kDatasetFormatVersion)
    throw ConfigError(hp.string() + ": unsupported format version");
  const std::size_t count = std::stoull(take("count"));
  file.stamp.config_hash = std::stoull(take("config_hash"), nullptr, 16);
  file.stamp.seed = std::stoull(take("seed"));
  const std::uint64_t task_seed = std::stoull(take("task.seed"));
  const std::size_t n_instances = std::stoull(take("task.n_instances"));
  PipelineConfig holder;
  apply_config(header, holder);
  file.task = holder.task;
  file.task.seed = task_seed;
  file.task.n_instances = n_instances;

  for (const Record& r : read_records(path)) file.instances.push_back(instance_from_record(r));
  if (file.instances.size() != count)
    throw ConfigError(path.string() + ": header says " + std::to_string(count) +
                      " records, found " + std::to_string(file.instances.size()));
  return file;
}

void write_scores(const std::filesystem::path& path, std::span<const ScoreRecord> scores,
                  const ArtifactStamp& stamp) {
  std::ofstream out = open_out(path);
  out << stamp_record(stamp).str() << '\n';
  for (const ScoreRecord& s : scores) {
    Record r;
    r.add("id", s.id)
        .add("predicted", tier(s.predicted))
        .add("confidence", s.confidence)
        .add("gold", tier(s.gold));
    out << r.str() << '\n';
  }
}

std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  std::vector<Record> records = read_records(path);
  if (records.empty()) throw ConfigError(path.string() + ": missing stamp line");
  std::vector<ScoreRecord> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const Record& r = records[i];
    out.push_back({r.get_int("id"), label_from_tier(static_cast<int>(r.get_int("predicted"))),
                   r.get_double("confidence"),
                   label_from_tier(static_cast<int>(r.get_int("gold")))});
  }
  return out;
}

void write_pool(const std::filesystem::path& path, std::span<const Instance> pool,
                double threshold, std::uint64_t pool_seed, const ArtifactStamp& stamp) {
  std::ofstream out = open_out(path);
  Record head = stamp_record(stamp);
  head.add("threshold", threshold).add("pool_seed", pool_seed).add("count",
                                                                   static_cast<std::uint64_t>(pool.size()));
  out << head.str() << '\n';
  for (const Instance& inst : pool) out << "id=" << inst.id << '\n';
}

PoolFile read_pool(const std::filesystem::path& path) {
  std::vector<Record> records = read_records(path);
  if (records.empty()) throw ConfigError(path.string() + ": missing pool header");
  PoolFile f;
  f.stamp = stamp_from(records[0]);
  f.threshold = records[0].get_double("threshold");
  f.seed = records[0].get_uint("pool_seed");
  for (std::size_t i = 1; i < records.size(); ++i) f.ids.push_back(records[i].get_int("id"));
  if (f.ids.size() != records[0].get_uint("count"))
    throw ConfigError(path.string() + ": pool count does not match its header");
  return f;
}

std::vector<Instance> select_ids(std::span<const Instance> dataset,
                                 std::span<const std::int64_t> ids) {
  std::unordered_map<std::int64_t, const Instance*> by_id;
  for (const Instance& inst : dataset) by_id[inst.id] = &inst;
  std::vector<Instance> out;
  out.reserve(ids.size());
  for (std::int64_t id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw ConfigError("instance id " + std::to_string(id) + " not in dataset");
    out.push_back(*it->second);
  }
  return out;
}

void write_pairs(const std::filesystem::path& path, std::span<const PreferencePair> pairs,
                 std::span<const Instance> source, const ArtifactStamp& stamp) {
  std::unordered_map<std::int64_t, const Instance*> by_id;
  for (const Instance& inst : source) by_id[inst.id] = &inst;
  std::ofstream out = open_out(path);
  out << stamp_record(stamp).str() << '\n';
  for (const PreferencePair& p : pairs) {
    const auto it = by_id.find(p.instance_id);
    if (it == by_id.end())
      throw ConfigError("pair refers to unknown instance " + std::to_string(p.instance_id));
    Record r = instance_record(*it->second);
    r.add("chosen", format_tokens(p.chosen)).add("rejected", format_tokens(p.rejected));
    out << r.str() << '\n';
  }
}

std::vector<PreferencePair> read_pairs(const std::filesystem::path& path) {
  std::vector<Record> records = read_records(path);
  if (records.empty()) throw ConfigError(path.string() + ": missing stamp line");
  std::vector<PreferencePair> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const Instance inst = instance_from_record(records[i]);
    out.push_back({inst.id, build_observation(inst, PromptVariant::kWithContext),
                   parse_tokens(records[i].get("chosen")),
                   parse_tokens(records[i].get("rejected"))});
  }
  return out;
}

void write_checkpoint_meta(const std::filesystem::path& checkpoint, const std::string& stage,
                           const ArtifactStamp& stamp) {
  std::filesystem::path meta = checkpoint;
  meta += ".meta";
  std::ofstream out = open_out(meta);
  Record r = stamp_record(stamp);
  r.add("stage", stage);
  out << r.str() << '\n';
}

Record step_record(const StepMetrics& m) {
  Record r;
  r.add("step", m.step)
      .add("mean_return_no_ctx", m.mean_return_no_ctx)
      .add("mean_return_with_ctx", m.mean_return_with_ctx)
      .add("acc_gap", m.acc_gap)
      .add("alpha", m.alpha)
      .add("beta", m.beta)
      .add("kl", m.kl)
      .add("clip_fraction", m.clip_fraction)
      .add("filtered", static_cast<std::uint64_t>(m.filtered_count))
      .add("kept", static_cast<std::uint64_t>(m.kept_count))
      .add("objective", m.objective)
      .add("skipped", m.skipped ? 1 : 0);
  return r;
}

}  // namespace ctxgate
