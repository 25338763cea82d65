#include "ctxgate/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace ctxgate {

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), bytes.size()))
    throw ConfigError("truncated checkpoint: " + path.string());
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void put_header(std::ostream& out, const std::array<char, 8>& magic,
                const Architecture& a, std::uint64_t count) {
  out.write(magic.data(), magic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, a.query_dim);
  put<std::uint32_t>(out, a.item_dim);
  put<std::uint32_t>(out, a.context_dim);
  put<std::uint32_t>(out, a.hidden);
  put<std::uint32_t>(out, a.embed);
  put<std::uint64_t>(out, count);
}

std::pair<Architecture, std::uint64_t> get_header(
    std::istream& in, const std::array<char, 8>& magic,
    const std::filesystem::path& path) {
  std::array<char, 8> got{};
  if (!in.read(got.data(), got.size()) || got != magic)
    throw ConfigError("bad checkpoint magic: " + path.string());
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw ConfigError("unsupported checkpoint version " +
                      std::to_string(version) + ": " + path.string());
  Architecture a;
  a.query_dim = get<std::uint32_t>(in, path);
  a.item_dim = get<std::uint32_t>(in, path);
  a.context_dim = get<std::uint32_t>(in, path);
  a.hidden = get<std::uint32_t>(in, path);
  a.embed = get<std::uint32_t>(in, path);
  const auto count = get<std::uint64_t>(in, path);
  if (count != a.param_count())
    throw ConfigError("checkpoint parameter count disagrees with header: " +
                      path.string());
  return {a, count};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Policy& policy,
                     const AdamState* optimizer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  const auto params = policy.params();
  put_header(out, kPolicyMagic, policy.arch(), params.size());
  for (double v : params) put<double>(out, v);
  if (optimizer != nullptr && !optimizer->m.empty()) {
    if (optimizer->m.size() != params.size() ||
        optimizer->v.size() != params.size())
      throw ConfigError("optimizer state does not match policy size");
    put_header(out, kOptimizerMagic, policy.arch(), params.size());
    put<std::uint64_t>(out, optimizer->step);
    for (double v : optimizer->m) put<double>(out, v);
    for (double v : optimizer->v) put<double>(out, v);
  }
  if (!out) throw ConfigError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint: " + path.string());
  const auto [arch, count] = get_header(in, kPolicyMagic, path);
  std::vector<double> params(count);
  for (auto& v : params) v = get<double>(in, path);
  Checkpoint ckpt{Policy(arch, std::move(params)), std::nullopt};

  if (in.peek() == std::char_traits<char>::eof()) return ckpt;
  const auto [opt_arch, opt_count] = get_header(in, kOptimizerMagic, path);
  if (!(opt_arch == arch))
    throw ConfigError("optimizer block architecture mismatch: " + path.string());
  AdamState state(opt_count);
  state.step = get<std::uint64_t>(in, path);
  for (auto& v : state.m) v = get<double>(in, path);
  for (auto& v : state.v) v = get<double>(in, path);
  ckpt.optimizer = std::move(state);
  return ckpt;
}

}  // namespace ctxgate
