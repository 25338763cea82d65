#ifndef CTXGATE_TESTS_SUPPORT_HPP_
#define CTXGATE_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ctxgate/env.hpp"
#include "ctxgate/policy.hpp"
#include "ctxgate/rng.hpp"

namespace ctxgate::testing {

// Small enough for exhaustive finite differences, wide enough for a
// non-trivial hidden layer.
inline Architecture tiny_arch() {
  Architecture a;
  a.query_dim = 4;
  a.item_dim = 4;
  a.context_dim = 4;
  a.hidden = 5;
  a.embed = 2;
  return a;
}

inline TaskConfig tiny_task(std::size_t n, std::uint64_t seed) {
  TaskConfig t;
  t.n_instances = n;
  t.query_dim = 4;
  t.seed = seed;
  return t;
}

inline Observation random_obs(const Architecture& a, Rng& rng, bool with_context) {
  std::normal_distribution<double> g(0.0, 1.0);
  Observation o;
  for (std::uint32_t i = 0; i < a.query_dim; ++i) o.query.push_back(g(rng));
  for (std::uint32_t i = 0; i < a.item_dim; ++i) o.item.push_back(g(rng));
  for (std::uint32_t i = 0; i < a.context_dim; ++i)
    o.context.push_back(with_context ? g(rng) : 0.0);
  o.context_flag = with_context ? 1.0 : 0.0;
  return o;
}

inline TokenPair random_tokens(Rng& rng) {
  std::uniform_int_distribution<int> u(0, kUsageVocab - 1), l(0, kLabelVocab - 1);
  return {usage_from_index(u(rng)), label_from_index(l(rng))};
}

// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero partials from
// turning round-off into large relative errors.
inline double rel_error(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Largest relative error between `analytic` and central differences of f
// over the listed coordinates of `policy`.
inline double max_fd_error(Policy& policy, const std::function<double(const Policy&)>& f,
                           const std::vector<double>& analytic,
                           const std::vector<std::size_t>& coords, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i : coords) {
    double& p = policy.params()[i];
    const double saved = p;
    p = saved + h;
    const double up = f(policy);
    p = saved - h;
    const double down = f(policy);
    p = saved;
    worst = std::max(worst, rel_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

inline std::vector<std::size_t> all_coords(const Policy& p) {
  std::vector<std::size_t> c(p.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = i;
  return c;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ctxgate_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ctxgate::testing

#endif  // CTXGATE_TESTS_SUPPORT_HPP_
