#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "loec/tensor.hpp"

namespace loec {

/// Binary segmentation mask; values are 0 (background) or 1 (foreground).
struct BinaryMask {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> values;

  BinaryMask() = default;
  BinaryMask(int h, int w, std::uint8_t fill = 0);

  std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
  std::size_t size() const noexcept { return values.size(); }
  std::size_t foreground_count() const noexcept;

  bool operator==(const BinaryMask&) const = default;
};

/// Nearest-neighbour resampling at pixel centres; keeps the mask binary.
BinaryMask downsample_nearest(const BinaryMask& mask, int out_h, int out_w);

enum class TextureFamily { kFlat, kStripes, kChecker, kSpeckle };
enum class IntensityTransform { kNone, kInvert, kGamma };

/// Appearance of one synthetic domain. Styling changes pixels only, never
/// geometry, so a seed yields the same masks in every domain.
struct DomainSpec {
  std::string name;
  TextureFamily texture_family = TextureFamily::kFlat;
  IntensityTransform intensity_transform = IntensityTransform::kNone;
  std::array<double, 3> color_cast{0.0, 0.0, 0.0};
  double noise_sigma = 0.0;
  /// Peak amplitude of the domain texture overlay, in [0, 1].
  double texture_contrast = 0.0;

  void validate() const;
};

DomainSpec source_domain();
/// Source plus the shipped targets, ordered by increasing shift.
const std::vector<DomainSpec>& builtin_domains();
/// Looks up a builtin domain by name; E_CONFIG when unknown.
const DomainSpec& find_domain(const std::string& name);

struct LabeledImage {
  FeatureMap image;  // (1, 3, H, W), values in [0, 1]
  BinaryMask mask;
};

struct Episode {
  std::vector<LabeledImage> support;
  FeatureMap query_image;
  BinaryMask query_mask;
  std::string domain_id;
  int class_id = 0;

  int shots() const noexcept { return static_cast<int>(support.size()); }
  int height() const noexcept { return query_image.h(); }
  int width() const noexcept { return query_image.w(); }
};

inline constexpr int kNumClasses = 6;

/// Deterministic episode for (seed, domain, shots, h, w). The query geometry is
/// drawn before the support geometry, so episodes with different shot counts
/// share their query and leading shots.
Episode generate_episode(std::uint64_t seed, const DomainSpec& domain, int shots, int h, int w);

}  // namespace loec
