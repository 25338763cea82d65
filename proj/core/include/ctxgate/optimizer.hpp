#ifndef CTXGATE_OPTIMIZER_HPP_
#define CTXGATE_OPTIMIZER_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace ctxgate {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled (AdamW) decay, applied as p -= lr * weight_decay * p.
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam(W) update that *ascends* along `ascent`, i.e. the gradient of an
// objective being maximised. Pass the negated loss gradient to minimise.
void optimizer_step(std::span<double> params, std::span<const double> ascent,
                    AdamState& state, double lr, const AdamConfig& config = {});

}  // namespace ctxgate

#endif  // CTXGATE_OPTIMIZER_HPP_
