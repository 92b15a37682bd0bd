#pragma once

#include <complex>
#include <vector>

#include "loec/tensor.hpp"

namespace loec {

/// Complex values over a (N, C, H, W) grid.
struct ComplexGrid {
  Shape shape;
  std::vector<std::complex<double>> values;
};

/// Polar form of a per-channel 2-D spectrum. Amplitude is non-negative and
/// phase lies in (-pi, pi]; a bin with zero modulus has phase 0.
struct ComplexSpectrum {
  Shape shape;
  std::vector<double> amplitude;
  std::vector<double> phase;
};

/// 1-D transform in place. Power-of-two lengths use radix-2 Cooley-Tukey,
/// anything else a direct O(n^2) sum. The inverse carries the 1/n factor.
void dft1d(std::span<std::complex<double>> data, bool inverse);

/// Per-channel 2-D transform over the spatial dims; forward is unnormalised,
/// inverse divides by H*W.
ComplexGrid dft2(const ComplexGrid& x, bool inverse);

ComplexGrid to_complex(const FeatureMap& x);
FeatureMap real_part(const ComplexGrid& x);

ComplexSpectrum to_polar(const ComplexGrid& x);
ComplexGrid from_polar(const ComplexSpectrum& s);

ComplexSpectrum fft2(const FeatureMap& x);
/// Inverse transform of amplitude * exp(i * phase), keeping the complex result.
ComplexGrid ifft2(const ComplexSpectrum& s);
/// Real part of ifft2. Non-Hermitian spectra lose their imaginary residue.
FeatureMap ifft2_real(const ComplexSpectrum& s);

}  // namespace loec
