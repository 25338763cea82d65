#ifndef CTXGATE_CHECKPOINT_HPP_
#define CTXGATE_CHECKPOINT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>

#include "ctxgate/optimizer.hpp"
#include "ctxgate/policy.hpp"

namespace ctxgate {

// Binary layout, all integers and floats little-endian:
//
//   "CTXGPOL1"               8-byte magic
//   u32 version              kCheckpointVersion
//   u32 x5                   query_dim item_dim context_dim hidden embed
//   u64 count                parameter count
//   f64 x count              parameters
//
// optionally followed by the optimizer block
//
//   "CTXGOPT1"               8-byte magic
//   u32 version
//   u32 x5                   same architecture header
//   u64 count
//   u64 step
//   f64 x count              first moments
//   f64 x count              second moments
inline constexpr std::array<char, 8> kPolicyMagic = {'C', 'T', 'X', 'G',
                                                     'P', 'O', 'L', '1'};
inline constexpr std::array<char, 8> kOptimizerMagic = {'C', 'T', 'X', 'G',
                                                        'O', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Policy policy;
  std::optional<AdamState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const Policy& policy,
                     const AdamState* optimizer = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ctxgate

#endif  // CTXGATE_CHECKPOINT_HPP_
