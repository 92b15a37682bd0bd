#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "loec/encoder.hpp"

namespace loec {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (all integers little-endian):
//   "LOEC" | u32 version | u32 tensor count
//   per tensor: u32 name length | name | u32 rank | u32 dims[rank] | f32 data
//   u64 FNV-1a checksum of every byte after the version field
// Tensors are "<stage>.weight" (rank 4) and "<stage>.bias" (rank 1).

std::vector<std::uint8_t> encode_checkpoint(const EncoderState& enc);

/// Restores weights into a freshly built encoder of the fixed architecture.
/// Freeze flags and tap index come from `tap_index`/defaults, not the file.
/// E_FORMAT on any structural problem, naming the offending tensor.
EncoderState decode_checkpoint(std::span<const std::uint8_t> bytes, int tap_index = 1);

void save_checkpoint(const EncoderState& enc, const std::filesystem::path& path);
EncoderState load_checkpoint(const std::filesystem::path& path, int tap_index = 1);

}  // namespace loec
