#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "loec/episode.hpp"
#include "loec/tensor.hpp"

namespace loec {

// Binary NetPBM: colour images as P6 and masks as P5, both with maxval 255.
// Decoders are strict: a wrong magic or maxval, bad dimensions, a short or
// overlong payload, or a mask byte other than 0/255 raises E_FORMAT.

/// Encodes a (1, 3, H, W) image in [0, 1], rounding to the nearest level.
std::vector<std::uint8_t> encode_ppm(const FeatureMap& image);
FeatureMap decode_ppm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_pgm(const BinaryMask& mask);
BinaryMask decode_pgm(std::span<const std::uint8_t> bytes);

void write_ppm(const std::filesystem::path& path, const FeatureMap& image);
FeatureMap read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_pgm(const std::filesystem::path& path);

}  // namespace loec
