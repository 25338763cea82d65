#include "ctxgate/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <type_traits>

#include "ctxgate/record.hpp"
#include "ctxgate/rng.hpp"

namespace ctxgate {

namespace {

template <typename T>
std::string to_text(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else if constexpr (std::is_same_v<T, double>) {
    return format_double(v);
  } else if constexpr (std::is_same_v<T, std::array<double, kLabelVocab>>) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
  } else if constexpr (std::is_same_v<T, PromptVariant> ||
                       std::is_same_v<T, ScalingMode> ||
                       std::is_same_v<T, GrpoAlgorithm>) {
    return std::string(to_string(v));
  } else {
    // std::optional<...>
    return v ? to_text(*v) : std::string("none");
  }
}

template <typename T>
void from_text(const std::string& s, T& out) {
  if constexpr (std::is_same_v<T, std::string>) {
    out = s;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1") out = true;
    else if (s == "false" || s == "0") out = false;
    else throw ConfigError("expected true/false, got '" + s + "'");
  } else if constexpr (std::is_integral_v<T>) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ConfigError("expected an integer, got '" + s + "'");
    out = v;
  } else if constexpr (std::is_same_v<T, double>) {
    out = parse_double(s);
  } else if constexpr (std::is_same_v<T, std::array<double, kLabelVocab>>) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t comma = s.find(',', pos);
      if ((comma == std::string::npos) != (i + 1 == out.size()))
        throw ConfigError("expected 4 comma-separated numbers, got '" + s + "'");
      out[i] = parse_double(s.substr(pos, comma - pos));
      pos = comma + 1;
    }
  } else if constexpr (std::is_same_v<T, PromptVariant>) {
    out = parse_variant(s);
  } else if constexpr (std::is_same_v<T, ScalingMode>) {
    out = parse_scaling_mode(s);
  } else if constexpr (std::is_same_v<T, GrpoAlgorithm>) {
    out = parse_algorithm(s);
  } else {
    if (s == "none") {
      out.reset();
    } else {
      typename T::value_type v{};
      from_text(s, v);
      out = v;
    }
  }
}

template <typename F>
void visit_fields(PipelineConfig& c, F&& f) {
  f("run.out_dir", c.run.out_dir);
  f("run.seed", c.run.seed);

  f("task.label_probs", c.task.label_probs);
  f("task.p_high_ambiguity", c.task.p_high_ambiguity);
  f("task.q_mislead", c.task.q_mislead);
  f("task.sigma_low", c.task.sigma_low);
  f("task.sigma_high", c.task.sigma_high);
  f("task.high_signal_scale", c.task.high_signal_scale);
  f("task.context_sigma", c.task.context_sigma);
  f("task.query_pad_sigma", c.task.query_pad_sigma);
  f("task.query_dim", c.task.query_dim);
  f("task.n_chunks", c.task.n_chunks);

  f("data.n_train", c.data.n_train);
  f("data.n_test", c.data.n_test);
  f("data.n_pool", c.data.n_pool);

  f("model.hidden", c.model.hidden);
  f("model.embed", c.model.embed);
  f("model.init_scale", c.model.init_scale);

  f("sft.epochs", c.sft.epochs);
  f("sft.batch_size", c.sft.batch_size);
  f("sft.lr", c.sft.lr);
  f("sft.weight_decay", c.sft.weight_decay);
  f("sft.variant", c.sft.variant);

  f("pool.threshold", c.pool.threshold);
  f("pool.category_cap", c.pool.category_cap);
  f("pool.cap_ratio", c.pool.cap_ratio);

  f("dpo.drafts_per_input", c.pairs.drafts_per_input);
  f("dpo.temperature", c.pairs.temperature);
  f("dpo.top_k", c.pairs.top_k);
  f("dpo.pair_cap", c.pairs.pair_cap);
  f("dpo.epochs", c.dpo.epochs);
  f("dpo.batch_size", c.dpo.batch_size);
  f("dpo.lr", c.dpo.lr);
  f("dpo.beta", c.dpo.beta);

  f("grpo.n_per_group", c.grpo.n_per_group);
  f("grpo.temperature", c.grpo.temperature);
  f("grpo.top_k", c.grpo.top_k);
  f("grpo.rollout_batch", c.grpo.rollout_batch);
  f("grpo.clip_eps", c.grpo.clip_eps);
  f("grpo.adv_clamp", c.grpo.adv_clamp);
  f("grpo.lambda_kl", c.grpo.lambda_kl);
  f("grpo.lr", c.grpo.lr);
  f("grpo.band_lower", c.grpo.band.lower);
  f("grpo.band_upper", c.grpo.band.upper);
  f("grpo.scaling", c.grpo.scaling);
  f("grpo.fixed_alpha", c.grpo.fixed_alpha);
  f("grpo.fixed_beta", c.grpo.fixed_beta);
  f("grpo.per_query_gap", c.grpo.per_query_gap);
  f("grpo.crossprompt_logprob", c.grpo.crossprompt_logprob);
  f("grpo.steps", c.grpo.steps);
  f("grpo.init", c.grpo_stage.init);
  f("grpo.algorithm", c.grpo_stage.algorithm);

  f("eval.checkpoint", c.eval.checkpoint);
  f("eval.variant", c.eval.variant);

  f("suite.n_seeds", c.suite.n_seeds);
  f("suite.high_noise_q", c.suite.high_noise_q);
  f("suite.top3_ablation", c.suite.top3_ablation);
}

}  // namespace

KeyValues read_ini(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ConfigError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.message());
  }
  KeyValues out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      out[section] = body.data();
      continue;
    }
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

void apply_config(const KeyValues& values, PipelineConfig& config,
                  const std::set<std::string>& required) {
  for (const std::string& key : required)
    if (!values.count(key)) throw ConfigError("missing config key '" + key + "'");
  std::set<std::string> consumed;
  visit_fields(config, [&](const char* key, auto& field) {
    const auto it = values.find(key);
    if (it == values.end()) return;
    try {
      from_text(it->second, field);
    } catch (const ConfigError& e) {
      throw ConfigError("config key '" + std::string(key) + "': " + e.what());
    }
    consumed.insert(key);
  });
  for (const auto& [key, value] : values)
    if (!consumed.count(key)) throw ConfigError("unknown config key '" + key + "'");
}

KeyValues dump_config(const PipelineConfig& config) {
  PipelineConfig copy = config;
  KeyValues out;
  visit_fields(copy, [&](const char* key, auto& field) { out[key] = to_text(field); });
  return out;
}

std::string format_config(const KeyValues& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

std::string format_ini(const KeyValues& values) {
  std::string out;
  std::string section;
  for (const auto& [k, v] : values) {
    const auto dot = k.find('.');
    const std::string s = k.substr(0, dot);
    if (s != section) {
      out += (out.empty() ? "[" : "\n[") + s + "]\n";
      section = s;
    }
    out += k.substr(dot + 1) + " = " + v + "\n";
  }
  return out;
}

std::uint64_t config_hash(const KeyValues& values) {
  // Where a run writes is not part of what it computes.
  KeyValues hashed = values;
  hashed.erase("run.out_dir");
  return fnv1a64(format_config(hashed));
}

}  // namespace ctxgate
