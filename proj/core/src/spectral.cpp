#include "loec/spectral.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "loec/error.hpp"

namespace loec {
namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void radix2(std::span<std::complex<double>> a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / len;
      const std::complex<double> w(std::cos(angle), std::sin(angle));
      for (std::size_t i = 0; i < n; i += len) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

void direct(std::span<std::complex<double>> a, bool inverse) {
  const std::size_t n = a.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce the index product first so the angle stays in [0, 2pi).
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / n;
      acc += a[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  std::copy(out.begin(), out.end(), a.begin());
}

}  // namespace

void dft1d(std::span<std::complex<double>> data, bool inverse) {
  if (data.size() <= 1) return;
  if (is_pow2(data.size())) {
    radix2(data, inverse);
  } else {
    direct(data, inverse);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
  }
}

ComplexGrid dft2(const ComplexGrid& x, bool inverse) {
  require(x.values.size() == x.shape.numel(), ErrorCode::kShape, "dft2: size mismatch");
  ComplexGrid out = x;
  const int h = x.shape.h;
  const int w = x.shape.w;
  std::vector<std::complex<double>> column(static_cast<std::size_t>(h));
  for (std::size_t base = 0; base < out.values.size(); base += x.shape.plane()) {
    for (int y = 0; y < h; ++y) {
      dft1d(std::span(out.values).subspan(base + static_cast<std::size_t>(y) * w, w), inverse);
    }
    for (int c = 0; c < w; ++c) {
      for (int y = 0; y < h; ++y) column[y] = out.values[base + static_cast<std::size_t>(y) * w + c];
      dft1d(column, inverse);
      for (int y = 0; y < h; ++y) out.values[base + static_cast<std::size_t>(y) * w + c] = column[y];
    }
  }
  return out;
}

ComplexGrid to_complex(const FeatureMap& x) {
  ComplexGrid g{x.shape(), {}};
  g.values.assign(x.data().begin(), x.data().end());
  return g;
}

FeatureMap real_part(const ComplexGrid& x) {
  std::vector<double> re(x.values.size());
  for (std::size_t i = 0; i < re.size(); ++i) re[i] = x.values[i].real();
  return FeatureMap(x.shape, std::move(re));
}

ComplexSpectrum to_polar(const ComplexGrid& x) {
  ComplexSpectrum s{x.shape, std::vector<double>(x.values.size()),
                    std::vector<double>(x.values.size())};
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double amp = std::abs(x.values[i]);
    s.amplitude[i] = amp;
    if (amp == 0.0) {
      s.phase[i] = 0.0;
    } else {
      double ph = std::arg(x.values[i]);
      if (ph <= -std::numbers::pi) ph = std::numbers::pi;
      s.phase[i] = ph;
    }
  }
  return s;
}

ComplexGrid from_polar(const ComplexSpectrum& s) {
  require(s.amplitude.size() == s.shape.numel() && s.phase.size() == s.shape.numel(),
          ErrorCode::kShape, "spectrum size does not match its shape");
  ComplexGrid g{s.shape, std::vector<std::complex<double>>(s.amplitude.size())};
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = std::polar(s.amplitude[i], s.phase[i]);
  return g;
}

ComplexSpectrum fft2(const FeatureMap& x) { return to_polar(dft2(to_complex(x), false)); }

ComplexGrid ifft2(const ComplexSpectrum& s) { return dft2(from_polar(s), true); }

FeatureMap ifft2_real(const ComplexSpectrum& s) { return real_part(ifft2(s)); }

}  // namespace loec
