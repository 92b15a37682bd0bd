#pragma once

#include <cstdint>

#include "loec/spectral.hpp"
#include "loec/tensor.hpp"

namespace loec {

/// Train-time low-level enhancement: a random convolution restyles the support
/// feature, then the amplitude spectrum of the restyled feature is recombined
/// with the phase spectrum of the original.
struct LemConfig {
  int kernel_size = 3;
  double sigma = 0.1;
  int tap = 1;
  bool apply_fourier = true;
  /// Probability that a given training episode is perturbed.
  double probability = 1.0;
  /// Draw a separate kernel per support shot instead of one per episode.
  bool per_shot = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// C x C x k x k kernel with i.i.d. N(0, sigma^2) weights, no bias, stride 1,
/// same padding. Deterministic in (cfg.seed, draw_index).
ConvKernel sample_theta(const LemConfig& cfg, int channels, std::uint64_t draw_index);

/// Random-convolution restyling; spatial shape is preserved.
FeatureMap perturb(const FeatureMap& features, const ConvKernel& theta);

/// Inverse transform of |FFT(perturbed)| * exp(i arg FFT(original)), real part.
FeatureMap fourier_recombine(const FeatureMap& original, const FeatureMap& perturbed);

/// Same recombination before the real part is taken.
ComplexGrid fourier_recombine_complex(const FeatureMap& original, const FeatureMap& perturbed);

/// Whether episode `draw_index` is perturbed under cfg.probability.
bool lem_fires(const LemConfig& cfg, std::uint64_t draw_index);

/// Full module for a (K, C, H, W) support feature: one kernel per episode, or
/// one per shot when cfg.per_shot is set.
FeatureMap apply_lem(const FeatureMap& features, const LemConfig& cfg, std::uint64_t draw_index);

/// Same pipeline with a caller-provided kernel.
FeatureMap apply_lem_with_kernel(const FeatureMap& features, const ConvKernel& theta,
                                 bool apply_fourier);

}  // namespace loec
