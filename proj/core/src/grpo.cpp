#include "ctxgate/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ctxgate {

std::string_view to_string(ScalingMode m) {
  switch (m) {
    case ScalingMode::kPosterior: return "posterior";
    case ScalingMode::kFixed: return "fixed";
    case ScalingMode::kLabelGated: return "label_gated";
  }
  return "?";
}

ScalingMode parse_scaling_mode(std::string_view s) {
  if (s == "posterior") return ScalingMode::kPosterior;
  if (s == "fixed") return ScalingMode::kFixed;
  if (s == "label_gated") return ScalingMode::kLabelGated;
  throw ConfigError("unknown scaling mode: " + std::string(s));
}

std::string_view to_string(GrpoAlgorithm a) {
  return a == GrpoAlgorithm::kDualGroup ? "dual" : "vanilla";
}

GrpoAlgorithm parse_algorithm(std::string_view s) {
  if (s == "dual") return GrpoAlgorithm::kDualGroup;
  if (s == "vanilla") return GrpoAlgorithm::kVanilla;
  throw ConfigError("unknown GRPO algorithm: " + std::string(s));
}

void GrpoConfig::validate() const {
  if (n_per_group < 2) throw ConfigError("grpo.n_per_group must be >= 2");
  if (!(temperature > 0.0)) throw ConfigError("grpo.temperature must be > 0");
  if (top_k < 1) throw ConfigError("grpo.top_k must be >= 1");
  if (rollout_batch == 0) throw ConfigError("grpo.rollout_batch must be positive");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("grpo.clip_eps must be in (0,1)");
  if (!(adv_clamp > 0.0)) throw ConfigError("grpo.adv_clamp must be > 0");
  if (lambda_kl < 0.0) throw ConfigError("grpo.lambda_kl must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("grpo.lr must be > 0");
  if (!(band.lower >= 0.0 && band.upper <= 1.0 && band.lower <= band.upper))
    throw ConfigError("grpo.band must lie within [0,1]");
  if (!(fixed_alpha > 0.0 && fixed_beta > 0.0))
    throw ConfigError("grpo.fixed_alpha and grpo.fixed_beta must be > 0");
  if (steps < 0) throw ConfigError("grpo.steps must be non-negative");
}

RolloutGroup rollout_group(const Policy& old_policy, const Instance& inst,
                           PromptVariant variant, int n, const SamplingSpec& spec,
                           Rng& rng) {
  if (n < 2) throw ConfigError("rollout groups need at least 2 members");
  RolloutGroup g;
  g.variant = variant;
  const Observation obs = build_observation(inst, variant);
  const PolicyState state = evaluate(old_policy, obs);
  g.rollouts.reserve(n);
  g.returns.reserve(n);
  for (int i = 0; i < n; ++i) {
    g.rollouts.push_back(sample_sequence(state, variant, spec, rng));
    g.returns.push_back(reward(g.rollouts.back().tokens.label, inst.gold));
  }
  return g;
}

std::pair<RolloutGroup, RolloutGroup> rollout_dual_groups(const Policy& old_policy,
                                                          const Instance& inst,
                                                          const GrpoConfig& config,
                                                          Rng& rng) {
  const SamplingSpec spec = config.sampling();
  RolloutGroup g0 = rollout_group(old_policy, inst, PromptVariant::kNoContext,
                                  config.n_per_group, spec, rng);
  RolloutGroup g1 = rollout_group(old_policy, inst, PromptVariant::kWithContext,
                                  config.n_per_group, spec, rng);
  return {std::move(g0), std::move(g1)};
}

void compute_intra_group_advantages(RolloutGroup& group) {
  const GroupStats st = group_statistics(group.returns);
  group.mean = st.mean;
  group.scale = st.scale;
  group.advantages = intra_group_advantages(group.returns);
}

double surrogate_loss_intra(const Policy& policy, const RolloutGroup& group,
                            const Observation& obs, const GrpoConfig& config,
                            std::span<double> grad, double weight,
                            ClipStats* stats) {
  const std::size_t n = group.rollouts.size();
  if (n == 0) return 0.0;
  if (group.advantages.size() != n)
    throw ConfigError("surrogate_loss_intra: advantages not computed");
  const SamplingSpec spec = config.sampling();
  const PolicyState s = evaluate(policy, obs);
  const TokenDistribution usage_dist = token_distribution(s.usage_logits, spec);
  std::array<TokenDistribution, kUsageVocab> label_dist = {
      token_distribution(s.label_logits[0], spec),
      token_distribution(s.label_logits[1], spec)};
  // Per-token weight: 1/n over rollouts times 1/|o| over tokens.
  const double norm = 1.0 / (static_cast<double>(n) * kSequenceLength);
  const double lo = 1.0 - config.clip_eps;
  const double hi = 1.0 + config.clip_eps;

  LogitGrads dl;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SampledSequence& seq = group.rollouts[i];
    const double adv = group.advantages[i];
    const int u = index(seq.tokens.usage);
    const int c = index(seq.tokens.label);
    const std::array<const TokenDistribution*, kSequenceLength> dists = {
        &usage_dist, &label_dist[u]};
    const std::array<int, kSequenceLength> toks = {u, c};
    for (int t = 0; t < kSequenceLength; ++t) {
      const double ratio = std::exp(dists[t]->logprob[toks[t]] - seq.logprobs[t]);
      const double unclipped = ratio * adv;
      const double clipped = std::clamp(ratio, lo, hi) * adv;
      if (stats) ++stats->tokens;
      if (clipped < unclipped) {
        // Clipped branch is constant in the parameters.
        total += norm * clipped;
        if (stats) ++stats->clipped;
        continue;
      }
      total += norm * unclipped;
      if (!grad.empty()) {
        std::span<double> target =
            t == 0 ? std::span<double>(dl.usage) : std::span<double>(dl.label[u]);
        add_logprob_gradient(*dists[t], toks[t], weight * norm * adv * ratio, target);
      }
    }
  }
  if (!grad.empty()) backprop(policy, s, dl, grad);
  return total;
}

double crossprompt_loss(const Policy& policy, const RolloutGroup& no_context_group,
                        const Observation& with_context_obs,
                        std::span<const double> scaled_advantages,
                        const GrpoConfig& config, std::span<double> grad,
                        double weight) {
  const std::size_t n = no_context_group.rollouts.size();
  if (n == 0) return 0.0;
  if (scaled_advantages.size() != n)
    throw ConfigError("crossprompt_loss: advantages not aligned with rollouts");
  const SamplingSpec spec = config.sampling();
  const PolicyState s = evaluate(policy, with_context_obs);
  const TokenDistribution usage_dist = token_distribution(s.usage_logits, spec);
  std::array<TokenDistribution, kUsageVocab> label_dist = {
      token_distribution(s.label_logits[0], spec),
      token_distribution(s.label_logits[1], spec)};
  const double norm = 1.0 / (static_cast<double>(n) * kSequenceLength);

  LogitGrads dl;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = scaled_advantages[i];
    if (scaled == 0.0) continue;
    const TokenPair& tok = no_context_group.rollouts[i].tokens;
    const int u = index(tok.usage);
    const std::array<const TokenDistribution*, kSequenceLength> dists = {
        &usage_dist, &label_dist[u]};
    const std::array<int, kSequenceLength> toks = {u, index(tok.label)};
    for (int t = 0; t < kSequenceLength; ++t) {
      std::span<double> target =
          t == 0 ? std::span<double>(dl.usage) : std::span<double>(dl.label[u]);
      if (config.crossprompt_logprob) {
        total += norm * dists[t]->logprob[toks[t]] * scaled;
        if (!grad.empty())
          add_logprob_gradient(*dists[t], toks[t], weight * norm * scaled, target);
      } else {
        // d pi = pi * d log pi.
        const double prob = dists[t]->prob[toks[t]];
        total += norm * prob * scaled;
        if (!grad.empty())
          add_logprob_gradient(*dists[t], toks[t], weight * norm * scaled * prob, target);
      }
    }
  }
  if (!grad.empty()) backprop(policy, s, dl, grad);
  return total;
}

VisitedStates VisitedStates::of(const Observation& obs, const RolloutGroup& group) {
  VisitedStates v;
  v.obs = &obs;
  v.first_position = group.rollouts.size();
  for (const auto& r : group.rollouts) ++v.second_position[index(r.tokens.usage)];
  return v;
}

double kl_over_states(const Policy& policy, const Policy& ref,
                      std::span<const VisitedStates> states, std::span<double> grad,
                      double weight) {
  std::size_t visits = 0;
  for (const auto& s : states) visits += s.total();
  if (visits == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(visits);
  double kl = 0.0;
  for (const auto& v : states) {
    const PolicyState sp = evaluate(policy, *v.obs);
    const PolicyState sr = evaluate(ref, *v.obs);
    LogitGrads dl;
    const bool want_grad = !grad.empty();
    const double w1 = static_cast<double>(v.first_position) * inv;
    if (w1 > 0.0) {
      kl += w1 * categorical_kl(sp.usage_logits, sr.usage_logits,
                                want_grad ? std::span<double>(dl.usage) : std::span<double>{},
                                weight * w1);
    }
    for (int u = 0; u < kUsageVocab; ++u) {
      const double w2 = static_cast<double>(v.second_position[u]) * inv;
      if (w2 == 0.0) continue;
      kl += w2 * categorical_kl(sp.label_logits[u], sr.label_logits[u],
                                want_grad ? std::span<double>(dl.label[u]) : std::span<double>{},
                                weight * w2);
    }
    if (want_grad) backprop(policy, sp, dl, grad);
  }
  return kl;
}

ObjectiveParts total_objective(const Policy& policy, const Policy& ref,
                               std::span<const PreparedPrompt> prompts,
                               const GrpoConfig& config, std::span<double> grad) {
  ObjectiveParts parts;
  if (prompts.empty()) return parts;
  const double w = 1.0 / static_cast<double>(prompts.size());
  std::vector<VisitedStates> visited;
  visited.reserve(2 * prompts.size());
  for (const PreparedPrompt& p : prompts) {
    if (!p.no_context.rollouts.empty()) {
      parts.intra_no_context += w * surrogate_loss_intra(policy, p.no_context, p.no_context_obs,
                                                         config, grad, w, &parts.clip);
      visited.push_back(VisitedStates::of(p.no_context_obs, p.no_context));
    }
    if (!p.with_context.rollouts.empty()) {
      parts.intra_with_context += w * surrogate_loss_intra(policy, p.with_context,
                                                           p.with_context_obs, config, grad,
                                                           w, &parts.clip);
      visited.push_back(VisitedStates::of(p.with_context_obs, p.with_context));
    }
    if (!p.scaled_advantages.empty()) {
      parts.crossprompt += w * crossprompt_loss(policy, p.no_context, p.with_context_obs,
                                                p.scaled_advantages, config, grad, w);
    }
  }
  parts.kl = kl_over_states(policy, ref, visited, grad, -config.lambda_kl);
  parts.total = parts.intra_no_context + parts.intra_with_context + parts.crossprompt -
                config.lambda_kl * parts.kl;
  return parts;
}

namespace {

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

ScalingCoeffs label_gated(const Instance& inst) {
  return inst.utility == Utility::kIgnore ? fixed_scaling(2.0, 0.05)
                                          : fixed_scaling(0.05, 2.0);
}

}  // namespace

std::vector<PreparedPrompt> prepare_batch(const Policy& old_policy,
                                          std::span<const Instance> batch,
                                          const GrpoConfig& config, Rng& rng,
                                          const StepVariant& variant,
                                          StepMetrics& metrics) {
  config.validate();
  const SamplingSpec spec = config.sampling();
  std::vector<PreparedPrompt> all;
  all.reserve(batch.size());
  double sum_no = 0.0, sum_with = 0.0;
  std::size_t cnt_no = 0, cnt_with = 0;
  for (const Instance& inst : batch) {
    Rng local(rng());
    PreparedPrompt p;
    p.inst = &inst;
    p.no_context_obs = build_observation(inst, PromptVariant::kNoContext);
    p.with_context_obs = build_observation(inst, PromptVariant::kWithContext);
    if (variant.no_context_group) {
      p.no_context = rollout_group(old_policy, inst, PromptVariant::kNoContext,
                                   config.n_per_group, spec, local);
      for (double r : p.no_context.returns) sum_no += r;
      cnt_no += p.no_context.returns.size();
    }
    p.with_context = rollout_group(old_policy, inst, PromptVariant::kWithContext,
                                   config.n_per_group, spec, local);
    for (double r : p.with_context.returns) sum_with += r;
    cnt_with += p.with_context.returns.size();
    all.push_back(std::move(p));
  }

  metrics.mean_return_no_ctx = cnt_no ? sum_no / static_cast<double>(cnt_no) : 0.0;
  metrics.mean_return_with_ctx = cnt_with ? sum_with / static_cast<double>(cnt_with) : 0.0;
  metrics.acc_gap = variant.no_context_group
                        ? metrics.mean_return_with_ctx - metrics.mean_return_no_ctx
                        : 0.0;
  const ScalingCoeffs batch_coeffs =
      posterior_scaling(metrics.mean_return_with_ctx, metrics.mean_return_no_ctx);

  std::vector<PreparedPrompt> kept;
  kept.reserve(all.size());
  double alpha_sum = 0.0, beta_sum = 0.0;
  for (PreparedPrompt& p : all) {
    if (!within_difficulty_band(p.no_context.returns, p.with_context.returns, config.band)) {
      ++metrics.filtered_count;
      continue;
    }
    for (RolloutGroup* g : {&p.no_context, &p.with_context}) {
      if (g->rollouts.empty()) continue;
      compute_intra_group_advantages(*g);
      for (double& a : g->advantages) a = clamp_advantage(a, config.adv_clamp);
    }
    if (variant.no_context_group && variant.crossprompt) {
      const UnionStats u = union_statistics(p.no_context.returns, p.with_context.returns);
      p.inter_advantages = inter_group_advantages(p.no_context.returns, u);
      switch (config.scaling) {
        case ScalingMode::kPosterior:
          p.coeffs = config.per_query_gap
                         ? posterior_scaling(mean_of(p.with_context.returns),
                                             mean_of(p.no_context.returns))
                         : batch_coeffs;
          break;
        case ScalingMode::kFixed:
          p.coeffs = fixed_scaling(config.fixed_alpha, config.fixed_beta);
          break;
        case ScalingMode::kLabelGated:
          p.coeffs = label_gated(*p.inst);
          break;
      }
      p.scaled_advantages.reserve(p.inter_advantages.size());
      for (double a : p.inter_advantages)
        p.scaled_advantages.push_back(
            clamp_advantage(piecewise_scale(a, p.coeffs), config.adv_clamp));
      alpha_sum += p.coeffs.alpha;
      beta_sum += p.coeffs.beta;
    }
    kept.push_back(std::move(p));
  }
  metrics.kept_count = kept.size();
  if (variant.no_context_group && variant.crossprompt) {
    if (config.scaling == ScalingMode::kPosterior && !config.per_query_gap) {
      metrics.alpha = batch_coeffs.alpha;
      metrics.beta = batch_coeffs.beta;
    } else if (!kept.empty()) {
      // Per-prompt coefficients are logged as their batch mean.
      metrics.alpha = alpha_sum / static_cast<double>(kept.size());
      metrics.beta = beta_sum / static_cast<double>(kept.size());
    }
  }
  return kept;
}

StepMetrics grpo_step(Policy& policy, AdamState& optimizer, const Policy& old_policy,
                      const Policy& ref, std::span<const Instance> batch,
                      const GrpoConfig& config, Rng& rng, const StepVariant& variant) {
  StepMetrics m;
  const std::vector<PreparedPrompt> prompts =
      prepare_batch(old_policy, batch, config, rng, variant, m);
  if (prompts.empty()) {
    m.skipped = true;
    return m;
  }
  std::vector<double> grad(policy.size(), 0.0);
  const ObjectiveParts parts = total_objective(policy, ref, prompts, config, grad);
  optimizer_step(policy.params(), grad, optimizer, config.lr);
  m.kl = parts.kl;
  m.objective = parts.total;
  m.clip_fraction = parts.clip.tokens
                        ? static_cast<double>(parts.clip.clipped) /
                              static_cast<double>(parts.clip.tokens)
                        : 0.0;
  return m;
}

StepMetrics vanilla_grpo_step(Policy& policy, AdamState& optimizer,
                              const Policy& old_policy, const Policy& ref,
                              std::span<const Instance> batch,
                              const GrpoConfig& config, Rng& rng) {
  GrpoConfig single = config;
  single.n_per_group = 2 * config.n_per_group;
  return grpo_step(policy, optimizer, old_policy, ref, batch, single, rng,
                   StepVariant{false, false});
}

GrpoRun train_grpo(const Policy& init, std::span<const Instance> pool,
                   const GrpoConfig& config, GrpoAlgorithm algorithm,
                   const StepSink& sink) {
  config.validate();
  if (pool.empty()) throw EmptyDatasetError("train_grpo: empty RL pool");
  GrpoRun run{init, AdamState(init.size()), {}};
  Rng rng(config.seed);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  const std::size_t batch_size = std::min(config.rollout_batch, pool.size());
  std::vector<Instance> batch;
  batch.reserve(batch_size);

  for (int step = 1; step <= config.steps; ++step) {
    batch.clear();
    while (batch.size() < batch_size) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(pool[order[cursor++]]);
    }
    const Policy old_policy = run.policy;
    StepMetrics m =
        algorithm == GrpoAlgorithm::kDualGroup
            ? grpo_step(run.policy, run.optimizer, old_policy, init, batch, config, rng)
            : vanilla_grpo_step(run.policy, run.optimizer, old_policy, init, batch,
                                config, rng);
    m.step = step;
    if (sink) sink(m);
    run.metrics.push_back(m);
  }
  return run;
}

}  // namespace ctxgate
