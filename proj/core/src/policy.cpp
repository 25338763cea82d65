#include "ctxgate/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace ctxgate {

namespace {

void check_block(std::size_t got, std::size_t want, const char* name) {
  if (got != want) {
    throw ConfigError(std::string("observation ") + name + " has dimension " +
                      std::to_string(got) + ", policy expects " +
                      std::to_string(want));
  }
}

}  // namespace

std::size_t Architecture::param_count() const {
  return ParamLayout::of(*this).total;
}

ParamLayout ParamLayout::of(const Architecture& arch) {
  const std::size_t d = arch.input_dim();
  const std::size_t h = arch.hidden;
  const std::size_t e = arch.embed;
  ParamLayout l;
  l.w1 = 0;
  l.b1 = l.w1 + h * d;
  l.wu = l.b1 + h;
  l.bu = l.wu + kUsageVocab * h;
  l.emb = l.bu + kUsageVocab;
  l.wl = l.emb + kUsageVocab * e;
  l.bl = l.wl + kLabelVocab * (h + e);
  l.total = l.bl + kLabelVocab;
  return l;
}

Policy::Policy(const Architecture& arch)
    : arch_(arch), layout_(ParamLayout::of(arch)), params_(layout_.total, 0.0) {
  if (arch.hidden == 0) throw ConfigError("hidden width must be positive");
}

Policy::Policy(const Architecture& arch, std::vector<double> params)
    : arch_(arch), layout_(ParamLayout::of(arch)), params_(std::move(params)) {
  if (params_.size() != layout_.total) {
    throw ConfigError("parameter count " + std::to_string(params_.size()) +
                      " does not match architecture (" +
                      std::to_string(layout_.total) + ")");
  }
}

Policy Policy::random(const Architecture& arch, std::uint64_t seed,
                      double scale) {
  Policy p(arch);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto& l = p.layout_;
  auto fill = [&](std::size_t begin, std::size_t end, double stddev) {
    for (std::size_t i = begin; i < end; ++i)
      p.params_[i] = scale * stddev * gauss(rng);
  };
  const double h = arch.hidden;
  fill(l.w1, l.b1, 1.0 / std::sqrt(static_cast<double>(arch.input_dim())));
  fill(l.wu, l.bu, 1.0 / std::sqrt(h));
  fill(l.emb, l.wl, 1.0);
  fill(l.wl, l.bl, 1.0 / std::sqrt(h + arch.embed));
  return p;
}

bool Policy::all_finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](double v) { return std::isfinite(v); });
}

PolicyState evaluate(const Policy& policy, const Observation& obs) {
  const Architecture& a = policy.arch();
  check_block(obs.query.size(), a.query_dim, "query block");
  check_block(obs.item.size(), a.item_dim, "item block");
  check_block(obs.context.size(), a.context_dim, "context block");

  const auto& l = policy.layout();
  const auto w = policy.params();
  const std::size_t d = a.input_dim();
  const std::size_t h = a.hidden;
  const std::size_t e = a.embed;

  PolicyState s;
  s.input.reserve(d);
  s.input.insert(s.input.end(), obs.query.begin(), obs.query.end());
  s.input.insert(s.input.end(), obs.item.begin(), obs.item.end());
  s.input.insert(s.input.end(), obs.context.begin(), obs.context.end());
  s.input.push_back(obs.context_flag);

  s.hidden.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double* row = w.data() + l.w1 + j * d;
    double acc = w[l.b1 + j];
    for (std::size_t k = 0; k < d; ++k) acc += row[k] * s.input[k];
    s.hidden[j] = std::tanh(acc);
  }

  for (int i = 0; i < kUsageVocab; ++i) {
    const double* row = w.data() + l.wu + i * h;
    double acc = w[l.bu + i];
    for (std::size_t j = 0; j < h; ++j) acc += row[j] * s.hidden[j];
    s.usage_logits[i] = acc;
  }

  for (int c = 0; c < kLabelVocab; ++c) {
    const double* row = w.data() + l.wl + c * (h + e);
    double shared = w[l.bl + c];
    for (std::size_t j = 0; j < h; ++j) shared += row[j] * s.hidden[j];
    for (int u = 0; u < kUsageVocab; ++u) {
      const double* emb = w.data() + l.emb + u * e;
      double acc = shared;
      for (std::size_t k = 0; k < e; ++k) acc += row[h + k] * emb[k];
      s.label_logits[u][c] = acc;
    }
  }
  return s;
}

void backprop(const Policy& policy, const PolicyState& state,
              const LogitGrads& dlogits, std::span<double> grad) {
  const Architecture& a = policy.arch();
  const auto& l = policy.layout();
  const auto w = policy.params();
  const std::size_t d = a.input_dim();
  const std::size_t h = a.hidden;
  const std::size_t e = a.embed;
  if (grad.size() != w.size())
    throw ConfigError("gradient buffer does not match parameter count");

  std::vector<double> dh(h, 0.0);

  for (int i = 0; i < kUsageVocab; ++i) {
    const double g = dlogits.usage[i];
    if (g == 0.0) continue;
    const double* row = w.data() + l.wu + i * h;
    double* grow = grad.data() + l.wu + i * h;
    for (std::size_t j = 0; j < h; ++j) {
      grow[j] += g * state.hidden[j];
      dh[j] += g * row[j];
    }
    grad[l.bu + i] += g;
  }

  for (int c = 0; c < kLabelVocab; ++c) {
    const double g_shared = dlogits.label[0][c] + dlogits.label[1][c];
    const bool any = dlogits.label[0][c] != 0.0 || dlogits.label[1][c] != 0.0;
    if (!any) continue;
    const double* row = w.data() + l.wl + c * (h + e);
    double* grow = grad.data() + l.wl + c * (h + e);
    for (std::size_t j = 0; j < h; ++j) {
      grow[j] += g_shared * state.hidden[j];
      dh[j] += g_shared * row[j];
    }
    for (int u = 0; u < kUsageVocab; ++u) {
      const double g = dlogits.label[u][c];
      if (g == 0.0) continue;
      const double* emb = w.data() + l.emb + u * e;
      double* gemb = grad.data() + l.emb + u * e;
      for (std::size_t k = 0; k < e; ++k) {
        grow[h + k] += g * emb[k];
        gemb[k] += g * row[h + k];
      }
    }
    grad[l.bl + c] += g_shared;
  }

  for (std::size_t j = 0; j < h; ++j) {
    const double dpre = dh[j] * (1.0 - state.hidden[j] * state.hidden[j]);
    if (dpre == 0.0) continue;
    grad[l.b1 + j] += dpre;
    double* grow = grad.data() + l.w1 + j * d;
    for (std::size_t k = 0; k < d; ++k) grow[k] += dpre * state.input[k];
  }
}

std::vector<double> forward(const Policy& policy, const Observation& obs,
                            std::optional<UsageToken> prev_usage) {
  const PolicyState s = evaluate(policy, obs);
  if (!prev_usage) return {s.usage_logits.begin(), s.usage_logits.end()};
  const auto& row = s.label_logits[index(*prev_usage)];
  return {row.begin(), row.end()};
}

int argmax_token(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

TokenDistribution token_distribution(std::span<const double> logits,
                                     const SamplingSpec& spec) {
  const int n = static_cast<int>(logits.size());
  if (n < 1 || n > kLabelVocab) throw ConfigError("unsupported vocabulary size");
  TokenDistribution dist;
  dist.size = n;
  dist.greedy = spec.greedy;
  const double log_floor = std::log(kLogClamp);

  if (spec.greedy) {
    const int best = argmax_token(logits);
    for (int i = 0; i < n; ++i) {
      dist.kept[i] = (i == best);
      dist.prob[i] = (i == best) ? 1.0 : 0.0;
      dist.logprob[i] = (i == best) ? 0.0 : log_floor;
    }
    return dist;
  }
  if (!(spec.temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (spec.top_k < 1) throw ConfigError("top_k must be >= 1");

  dist.inv_temperature = 1.0 / spec.temperature;
  if (spec.top_k >= n) {
    dist.kept.fill(true);
  } else {
    std::array<int, kLabelVocab> order{};
    std::iota(order.begin(), order.begin() + n, 0);
    std::stable_sort(order.begin(), order.begin() + n,
                     [&](int x, int y) { return logits[x] > logits[y]; });
    for (int r = 0; r < spec.top_k; ++r) dist.kept[order[r]] = true;
  }

  double zmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (dist.kept[i]) zmax = std::max(zmax, logits[i] * dist.inv_temperature);
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    if (dist.kept[i]) sum += std::exp(logits[i] * dist.inv_temperature - zmax);
  const double lse = zmax + std::log(sum);
  for (int i = 0; i < n; ++i) {
    if (dist.kept[i]) {
      dist.logprob[i] = std::max(logits[i] * dist.inv_temperature - lse, log_floor);
      dist.prob[i] = std::exp(logits[i] * dist.inv_temperature - lse);
    } else {
      dist.logprob[i] = log_floor;
      dist.prob[i] = 0.0;
    }
  }
  return dist;
}

int sample_token(const TokenDistribution& dist, Rng& rng) {
  if (dist.greedy) return argmax_token({dist.prob.data(), std::size_t(dist.size)});
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double cdf = 0.0;
  int last = 0;
  for (int i = 0; i < dist.size; ++i) {
    if (!dist.kept[i]) continue;
    cdf += dist.prob[i];
    last = i;
    if (u < cdf) return i;
  }
  return last;
}

void add_logprob_gradient(const TokenDistribution& dist, int token,
                          double weight, std::span<double> dlogits) {
  if (dist.greedy || !dist.kept[token] || weight == 0.0) return;
  for (int j = 0; j < dist.size; ++j) {
    if (!dist.kept[j]) continue;
    const double delta = (j == token) ? 1.0 : 0.0;
    dlogits[j] += weight * (delta - dist.prob[j]) * dist.inv_temperature;
  }
}

SampledSequence sample_sequence(const PolicyState& state,
                                PromptVariant variant,
                                const SamplingSpec& spec, Rng& rng) {
  SampledSequence seq;
  seq.variant = variant;
  const auto usage_dist = token_distribution(state.usage_logits, spec);
  const int u = sample_token(usage_dist, rng);
  const auto label_dist = token_distribution(state.label_logits[u], spec);
  const int c = sample_token(label_dist, rng);
  seq.tokens = {usage_from_index(u), label_from_index(c)};
  seq.logprobs = {usage_dist.logprob[u], label_dist.logprob[c]};
  return seq;
}

SampledSequence sample_sequence(const Policy& policy, const Observation& obs,
                                const SamplingSpec& spec, Rng& rng) {
  return sample_sequence(evaluate(policy, obs), obs.variant(), spec, rng);
}

std::array<double, kSequenceLength> token_logprobs(const PolicyState& state,
                                                   TokenPair tokens,
                                                   const SamplingSpec& spec) {
  const int u = index(tokens.usage);
  const auto usage_dist = token_distribution(state.usage_logits, spec);
  const auto label_dist = token_distribution(state.label_logits[u], spec);
  return {usage_dist.logprob[u], label_dist.logprob[index(tokens.label)]};
}

double sequence_logprob(const Policy& policy, const Observation& obs,
                        TokenPair tokens, const SamplingSpec& spec) {
  const auto lp = token_logprobs(evaluate(policy, obs), tokens, spec);
  return lp[0] + lp[1];
}

void add_sequence_logprob_gradient(const PolicyState& state, TokenPair tokens,
                                   double weight, LogitGrads& dlogits,
                                   const SamplingSpec& spec) {
  const int u = index(tokens.usage);
  add_logprob_gradient(token_distribution(state.usage_logits, spec), u, weight,
                       dlogits.usage);
  add_logprob_gradient(token_distribution(state.label_logits[u], spec),
                       index(tokens.label), weight, dlogits.label[u]);
}

std::vector<double> sequence_logprob_gradient(const Policy& policy,
                                              const Observation& obs,
                                              TokenPair tokens,
                                              const SamplingSpec& spec) {
  const PolicyState state = evaluate(policy, obs);
  LogitGrads dl;
  add_sequence_logprob_gradient(state, tokens, 1.0, dl, spec);
  std::vector<double> grad(policy.size(), 0.0);
  backprop(policy, state, dl, grad);
  return grad;
}

double categorical_kl(std::span<const double> logits_a,
                      std::span<const double> logits_b,
                      std::span<double> dlogits_a, double weight) {
  const auto pa = token_distribution(logits_a, {});
  const auto pb = token_distribution(logits_b, {});
  double kl = 0.0;
  for (int i = 0; i < pa.size; ++i)
    kl += pa.prob[i] * (pa.logprob[i] - pb.logprob[i]);
  if (!dlogits_a.empty() && weight != 0.0) {
    for (int i = 0; i < pa.size; ++i)
      dlogits_a[i] +=
          weight * pa.prob[i] * (pa.logprob[i] - pb.logprob[i] - kl);
  }
  return std::max(kl, 0.0);
}

double kl_exact(const Policy& a, const Policy& b, const Observation& obs,
                std::optional<UsageToken> prev_usage) {
  if (!(a.arch() == b.arch()))
    throw ConfigError("kl_exact requires identical architectures");
  return categorical_kl(forward(a, obs, prev_usage), forward(b, obs, prev_usage));
}

}  // namespace ctxgate
