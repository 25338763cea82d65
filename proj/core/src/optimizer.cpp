#include "ctxgate/optimizer.hpp"

#include <cmath>

#include "ctxgate/types.hpp"

namespace ctxgate {

void optimizer_step(std::span<double> params, std::span<const double> ascent,
                    AdamState& state, double lr, const AdamConfig& config) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (ascent.size() != params.size())
    throw ConfigError("gradient size does not match parameter count");
  if (state.m.empty()) state = AdamState(params.size());
  if (state.m.size() != params.size())
    throw ConfigError("optimizer state size does not match parameter count");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = ascent[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    if (config.weight_decay != 0.0)
      params[i] -= lr * config.weight_decay * params[i];
    params[i] += lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

}  // namespace ctxgate
