#pragma once

// Binary checkpoint layout (all little-endian):
//
//   u32 magic "STTC" | u32 version
//   geometry: u32 stem_kind, in_height, in_width, in_channels, patch, channels,
//             frames, dim, heads, blocks, mlp_dim, classes, spatial, temporal,
//             readout
//   u64 tensor_count, then per tensor in ModelParams::named_tensors() order:
//       u64 numel, numel x f32
//   u64 epoch | str rng_state | u64 config_digest
//   u64 velocity_count, then per buffer: u64 numel, numel x f32
//   u64 FNV-1a checksum of every preceding byte
//
// `str` is a u64 byte length followed by the bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stt/model.hpp"

namespace stt {

inline constexpr std::uint32_t kCheckpointMagic = 0x43545453;  // "STTC"
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<TrainReal> params;
  std::uint64_t epoch = 0;  // completed epochs
  std::string rng_state;
  std::uint64_t config_digest = 0;
  std::vector<std::vector<TrainReal>> velocity;  // empty unless momentum is used
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);

/// Errors: VersionMismatchError, CorruptFileError (bad magic, truncation,
/// size or checksum failure), GeometryMismatchError (when `expected` is given
/// and the header disagrees; checked before the payload).
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const std::optional<ModelGeometry>& expected = std::nullopt);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path,
                           const std::optional<ModelGeometry>& expected = std::nullopt);

}  // namespace stt
