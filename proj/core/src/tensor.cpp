#include "loec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "loec/error.hpp"

namespace loec {
namespace {

void check_shape(const Shape& s) {
  require(s.n > 0 && s.c > 0 && s.h > 0 && s.w > 0, ErrorCode::kShape,
          "shape components must be positive, got (" + std::to_string(s.n) + "," +
              std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) +
              ")");
}

// Output positions `o` whose input tap o*stride + k - pad lies inside [0, in).
struct ValidRange {
  int begin;
  int end;
};

ValidRange valid_range(int in, int out, int k, int stride, int pad) {
  int lo = pad - k;
  int begin = lo <= 0 ? 0 : (lo + stride - 1) / stride;
  int hi = in - 1 + pad - k;
  int end = hi < 0 ? 0 : hi / stride + 1;
  return {std::min(begin, out), std::clamp(end, 0, out)};
}

struct AxisTaps {
  std::vector<int> i0;
  std::vector<int> i1;
  std::vector<double> frac;
};

AxisTaps axis_taps(int in, int out) {
  AxisTaps t;
  t.i0.resize(out);
  t.i1.resize(out);
  t.frac.resize(out);
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int i0 = std::min(static_cast<int>(std::floor(src)), in - 1);
    t.i0[o] = i0;
    t.i1[o] = std::min(i0 + 1, in - 1);
    t.frac[o] = src - i0;
  }
  return t;
}

}  // namespace

FeatureMap::FeatureMap(Shape shape, double fill) : shape_(shape) {
  check_shape(shape);
  data_.assign(shape.numel(), fill);
}

FeatureMap::FeatureMap(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  check_shape(shape);
  require(data_.size() == shape.numel(), ErrorCode::kShape,
          "data length " + std::to_string(data_.size()) + " does not match shape volume " +
              std::to_string(shape.numel()));
}

FeatureMap FeatureMap::item(int n) const {
  Shape s = shape_;
  s.n = 1;
  const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(n * s.numel());
  return FeatureMap(s, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(s.numel())));
}

ConvKernel same_kernel(FeatureMap weights) {
  require(weights.h() % 2 == 1 && weights.w() % 2 == 1, ErrorCode::kShape,
          "same-padding kernels must have odd spatial size");
  const int pad = weights.h() / 2;
  require(weights.w() / 2 == pad, ErrorCode::kShape, "same-padding kernels must be square");
  return ConvKernel{std::move(weights), 1, pad};
}

ConvKernel identity_kernel(int channels, int size) {
  FeatureMap w(Shape{channels, channels, size, size});
  for (int c = 0; c < channels; ++c) w.at(c, c, size / 2, size / 2) = 1.0;
  return same_kernel(std::move(w));
}

int conv_output_size(int in, int kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

FeatureMap conv2d(const FeatureMap& x, const ConvKernel& k, std::span<const double> bias) {
  require(x.c() == k.in_channels(), ErrorCode::kShape,
          "conv2d: input has " + std::to_string(x.c()) + " channels, kernel expects " +
              std::to_string(k.in_channels()));
  require(k.stride >= 1 && k.padding >= 0, ErrorCode::kShape, "conv2d: bad stride/padding");
  require(bias.empty() || static_cast<int>(bias.size()) == k.out_channels(), ErrorCode::kShape,
          "conv2d: bias length mismatch");
  const int oh = conv_output_size(x.h(), k.kernel_h(), k.stride, k.padding);
  const int ow = conv_output_size(x.w(), k.kernel_w(), k.stride, k.padding);
  require(oh >= 1 && ow >= 1, ErrorCode::kShape, "conv2d: kernel larger than padded input");

  FeatureMap out(Shape{x.n(), k.out_channels(), oh, ow});
  const int s = k.stride;
  const int p = k.padding;
  for (int n = 0; n < x.n(); ++n) {
    for (int oc = 0; oc < k.out_channels(); ++oc) {
      auto dst = out.plane(n, oc);
      if (!bias.empty()) std::fill(dst.begin(), dst.end(), bias[oc]);
      for (int ic = 0; ic < x.c(); ++ic) {
        const auto src = x.plane(n, ic);
        for (int ky = 0; ky < k.kernel_h(); ++ky) {
          const auto ry = valid_range(x.h(), oh, ky, s, p);
          for (int kx = 0; kx < k.kernel_w(); ++kx) {
            const double wv = k.weights.at(oc, ic, ky, kx);
            if (wv == 0.0) continue;
            const auto rx = valid_range(x.w(), ow, kx, s, p);
            for (int y = ry.begin; y < ry.end; ++y) {
              const double* in_row = src.data() + static_cast<std::size_t>(y * s + ky - p) * x.w();
              double* out_row = dst.data() + static_cast<std::size_t>(y) * ow;
              if (s == 1) {
                const double* in_ptr = in_row + kx - p;
                for (int xo = rx.begin; xo < rx.end; ++xo) out_row[xo] += wv * in_ptr[xo];
              } else {
                for (int xo = rx.begin; xo < rx.end; ++xo)
                  out_row[xo] += wv * in_row[xo * s + kx - p];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

FeatureMap conv2d_grad_input(const FeatureMap& grad_out, const ConvKernel& k,
                             const Shape& input_shape) {
  require(grad_out.c() == k.out_channels() && input_shape.c == k.in_channels(),
          ErrorCode::kShape, "conv2d_grad_input: channel mismatch");
  FeatureMap gin(input_shape);
  const int oh = grad_out.h();
  const int ow = grad_out.w();
  const int s = k.stride;
  const int p = k.padding;
  for (int n = 0; n < input_shape.n; ++n) {
    for (int oc = 0; oc < k.out_channels(); ++oc) {
      const auto g = grad_out.plane(n, oc);
      for (int ic = 0; ic < input_shape.c; ++ic) {
        auto dst = gin.plane(n, ic);
        for (int ky = 0; ky < k.kernel_h(); ++ky) {
          const auto ry = valid_range(input_shape.h, oh, ky, s, p);
          for (int kx = 0; kx < k.kernel_w(); ++kx) {
            const double wv = k.weights.at(oc, ic, ky, kx);
            if (wv == 0.0) continue;
            const auto rx = valid_range(input_shape.w, ow, kx, s, p);
            for (int y = ry.begin; y < ry.end; ++y) {
              double* in_row = dst.data() + static_cast<std::size_t>(y * s + ky - p) * input_shape.w;
              const double* g_row = g.data() + static_cast<std::size_t>(y) * ow;
              for (int xo = rx.begin; xo < rx.end; ++xo) in_row[xo * s + kx - p] += wv * g_row[xo];
            }
          }
        }
      }
    }
  }
  return gin;
}

void conv2d_accumulate_grad_weight(const FeatureMap& grad_out, const FeatureMap& x,
                                   const ConvKernel& k, FeatureMap& grad_weight,
                                   std::span<double> grad_bias) {
  require(grad_weight.shape() == k.weights.shape(), ErrorCode::kShape,
          "conv2d grad_weight shape mismatch");
  const int oh = grad_out.h();
  const int ow = grad_out.w();
  const int s = k.stride;
  const int p = k.padding;
  for (int n = 0; n < x.n(); ++n) {
    for (int oc = 0; oc < k.out_channels(); ++oc) {
      const auto g = grad_out.plane(n, oc);
      if (!grad_bias.empty()) {
        double acc = 0.0;
        for (double v : g) acc += v;
        grad_bias[oc] += acc;
      }
      for (int ic = 0; ic < x.c(); ++ic) {
        const auto src = x.plane(n, ic);
        for (int ky = 0; ky < k.kernel_h(); ++ky) {
          const auto ry = valid_range(x.h(), oh, ky, s, p);
          for (int kx = 0; kx < k.kernel_w(); ++kx) {
            const auto rx = valid_range(x.w(), ow, kx, s, p);
            double acc = 0.0;
            for (int y = ry.begin; y < ry.end; ++y) {
              const double* in_row = src.data() + static_cast<std::size_t>(y * s + ky - p) * x.w();
              const double* g_row = g.data() + static_cast<std::size_t>(y) * ow;
              for (int xo = rx.begin; xo < rx.end; ++xo) acc += g_row[xo] * in_row[xo * s + kx - p];
            }
            grad_weight.at(oc, ic, ky, kx) += acc;
          }
        }
      }
    }
  }
}

FeatureMap bilinear_resize(const FeatureMap& x, int out_h, int out_w) {
  require(out_h >= 1 && out_w >= 1, ErrorCode::kShape, "bilinear_resize: empty output size");
  if (out_h == x.h() && out_w == x.w()) return x;
  const auto ty = axis_taps(x.h(), out_h);
  const auto tx = axis_taps(x.w(), out_w);
  FeatureMap out(Shape{x.n(), x.c(), out_h, out_w});
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const auto src = x.plane(n, c);
      auto dst = out.plane(n, c);
      for (int y = 0; y < out_h; ++y) {
        const double* r0 = src.data() + static_cast<std::size_t>(ty.i0[y]) * x.w();
        const double* r1 = src.data() + static_cast<std::size_t>(ty.i1[y]) * x.w();
        const double fy = ty.frac[y];
        for (int xo = 0; xo < out_w; ++xo) {
          const double fx = tx.frac[xo];
          const double top = r0[tx.i0[xo]] + fx * (r0[tx.i1[xo]] - r0[tx.i0[xo]]);
          const double bot = r1[tx.i0[xo]] + fx * (r1[tx.i1[xo]] - r1[tx.i0[xo]]);
          dst[static_cast<std::size_t>(y) * out_w + xo] = top + fy * (bot - top);
        }
      }
    }
  }
  return out;
}

FeatureMap bilinear_resize_grad(const FeatureMap& grad_out, const Shape& input_shape) {
  if (grad_out.h() == input_shape.h && grad_out.w() == input_shape.w) return grad_out;
  const auto ty = axis_taps(input_shape.h, grad_out.h());
  const auto tx = axis_taps(input_shape.w, grad_out.w());
  FeatureMap gin(input_shape);
  for (int n = 0; n < input_shape.n; ++n) {
    for (int c = 0; c < input_shape.c; ++c) {
      const auto g = grad_out.plane(n, c);
      auto dst = gin.plane(n, c);
      for (int y = 0; y < grad_out.h(); ++y) {
        const double fy = ty.frac[y];
        double* r0 = dst.data() + static_cast<std::size_t>(ty.i0[y]) * input_shape.w;
        double* r1 = dst.data() + static_cast<std::size_t>(ty.i1[y]) * input_shape.w;
        for (int xo = 0; xo < grad_out.w(); ++xo) {
          const double v = g[static_cast<std::size_t>(y) * grad_out.w() + xo];
          const double fx = tx.frac[xo];
          r0[tx.i0[xo]] += v * (1 - fy) * (1 - fx);
          r0[tx.i1[xo]] += v * (1 - fy) * fx;
          r1[tx.i0[xo]] += v * fy * (1 - fx);
          r1[tx.i1[xo]] += v * fy * fx;
        }
      }
    }
  }
  return gin;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::kShape, "dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), ErrorCode::kShape,
          "cosine: vectors must have equal non-zero length");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
  require(a.shape() == b.shape(), ErrorCode::kShape, "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

bool all_finite(const FeatureMap& x) noexcept {
  return std::all_of(x.data().begin(), x.data().end(), [](double v) { return std::isfinite(v); });
}

void relu_inplace(FeatureMap& x) noexcept {
  for (double& v : x.data()) v = v > 0.0 ? v : 0.0;
}

void axpy(double alpha, const FeatureMap& y, FeatureMap& x) {
  require(x.shape() == y.shape(), ErrorCode::kShape, "axpy: shape mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += alpha * y.data()[i];
}

FeatureMap scaled(const FeatureMap& x, double alpha) {
  FeatureMap out = x;
  for (double& v : out.data()) v *= alpha;
  return out;
}

}  // namespace loec
