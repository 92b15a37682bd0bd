#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace loec {

/// (batch, channels, height, width). All components are strictly positive.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
};

/// Dense rank-4 tensor in row-major NCHW order. Storage is 64-bit so that
/// gradient checks can run without a separate precision path.
class FeatureMap {
 public:
  FeatureMap() = default;
  explicit FeatureMap(Shape shape, double fill = 0.0);
  FeatureMap(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  int n() const noexcept { return shape_.n; }
  int c() const noexcept { return shape_.c; }
  int h() const noexcept { return shape_.h; }
  int w() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  double& at(int n, int c, int y, int x) noexcept { return data_[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const noexcept { return data_[index(n, c, y, x)]; }

  /// One H×W channel plane.
  std::span<double> plane(int n, int c) noexcept {
    return {data_.data() + index(n, c, 0, 0), shape_.plane()};
  }
  std::span<const double> plane(int n, int c) const noexcept {
    return {data_.data() + index(n, c, 0, 0), shape_.plane()};
  }

  /// Copy of batch item `n` as a batch-1 map.
  FeatureMap item(int n) const;

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t index(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{};
  std::vector<double> data_;
};

/// Convolution filter bank laid out (out-channels, in-channels, kh, kw).
struct ConvKernel {
  FeatureMap weights;
  int stride = 1;
  int padding = 0;

  int out_channels() const noexcept { return weights.n(); }
  int in_channels() const noexcept { return weights.c(); }
  int kernel_h() const noexcept { return weights.h(); }
  int kernel_w() const noexcept { return weights.w(); }
};

/// Stride-1 kernel with "same" padding for an odd kernel size.
ConvKernel same_kernel(FeatureMap weights);

/// Kernel whose output reproduces its input (centre tap 1 on the diagonal).
ConvKernel identity_kernel(int channels, int size);

int conv_output_size(int in, int kernel, int stride, int padding);

/// Cross-correlation with zero padding. `bias` is empty or has one entry per
/// output channel.
FeatureMap conv2d(const FeatureMap& x, const ConvKernel& k,
                  std::span<const double> bias = {});

/// Gradients of conv2d. `grad_out` has the forward output's shape.
FeatureMap conv2d_grad_input(const FeatureMap& grad_out, const ConvKernel& k,
                             const Shape& input_shape);
void conv2d_accumulate_grad_weight(const FeatureMap& grad_out, const FeatureMap& x,
                                   const ConvKernel& k, FeatureMap& grad_weight,
                                   std::span<double> grad_bias);

/// Half-pixel-centre bilinear interpolation over the spatial dims.
FeatureMap bilinear_resize(const FeatureMap& x, int out_h, int out_w);
FeatureMap bilinear_resize_grad(const FeatureMap& grad_out, const Shape& input_shape);

/// dot(a, b) / (|a| |b|), or 0 when either norm vanishes.
double cosine(std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double max_abs_diff(const FeatureMap& a, const FeatureMap& b);
bool all_finite(const FeatureMap& x) noexcept;

void relu_inplace(FeatureMap& x) noexcept;
/// x += alpha * y; shapes must match.
void axpy(double alpha, const FeatureMap& y, FeatureMap& x);
FeatureMap scaled(const FeatureMap& x, double alpha);

}  // namespace loec
