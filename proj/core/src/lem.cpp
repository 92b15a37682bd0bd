#include "loec/lem.hpp"

#include "loec/error.hpp"
#include "loec/random.hpp"

namespace loec {

void LemConfig::validate() const {
  require(kernel_size >= 1 && kernel_size % 2 == 1, ErrorCode::kConfig, "lem.kernel_size must be odd");
  require(sigma >= 0.0, ErrorCode::kConfig, "lem.sigma must be non-negative");
  require(probability >= 0.0 && probability <= 1.0, ErrorCode::kConfig, "lem.prob must lie in [0, 1]");
  require(tap >= 0, ErrorCode::kConfig, "lem.tap must be non-negative");
}

ConvKernel sample_theta(const LemConfig& cfg, int channels, std::uint64_t draw_index) {
  require(channels >= 1, ErrorCode::kShape, "sample_theta: channels must be positive");
  cfg.validate();
  FeatureMap w(Shape{channels, channels, cfg.kernel_size, cfg.kernel_size});
  const std::uint64_t key = derive_seed(cfg.seed, draw_index);
  auto data = w.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = cfg.sigma * counter_normal(key, i);
  return same_kernel(std::move(w));
}

FeatureMap perturb(const FeatureMap& features, const ConvKernel& theta) {
  require(theta.stride == 1 && theta.padding == theta.kernel_h() / 2, ErrorCode::kShape,
          "perturbation kernel must use stride 1 and same padding");
  return conv2d(features, theta);
}

ComplexGrid fourier_recombine_complex(const FeatureMap& original, const FeatureMap& perturbed) {
  require(original.shape() == perturbed.shape(), ErrorCode::kShape,
          "fourier_recombine: original and perturbed shapes differ");
  const ComplexSpectrum content = fft2(original);
  ComplexSpectrum style = fft2(perturbed);
  style.phase = content.phase;
  return ifft2(style);
}

FeatureMap fourier_recombine(const FeatureMap& original, const FeatureMap& perturbed) {
  return real_part(fourier_recombine_complex(original, perturbed));
}

bool lem_fires(const LemConfig& cfg, std::uint64_t draw_index) {
  if (cfg.probability >= 1.0) return true;
  if (cfg.probability <= 0.0) return false;
  return counter_uniform(derive_seed(cfg.seed, 0x70726f62), draw_index) < cfg.probability;
}

FeatureMap apply_lem_with_kernel(const FeatureMap& features, const ConvKernel& theta,
                                 bool apply_fourier) {
  FeatureMap restyled = perturb(features, theta);
  if (!apply_fourier) return restyled;
  return fourier_recombine(features, restyled);
}

FeatureMap apply_lem(const FeatureMap& features, const LemConfig& cfg, std::uint64_t draw_index) {
  if (!cfg.per_shot || features.n() == 1) {
    return apply_lem_with_kernel(features, sample_theta(cfg, features.c(), draw_index),
                                 cfg.apply_fourier);
  }
  FeatureMap out(features.shape());
  const std::size_t item = features.shape().numel() / static_cast<std::size_t>(features.n());
  for (int k = 0; k < features.n(); ++k) {
    const auto shot_draw = derive_seed(draw_index, static_cast<std::uint64_t>(k) + 1);
    const FeatureMap shot = apply_lem_with_kernel(
        features.item(k), sample_theta(cfg, features.c(), shot_draw), cfg.apply_fourier);
    std::copy(shot.data().begin(), shot.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(k * item));
  }
  return out;
}

}  // namespace loec
