#include "loec/episode.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "loec/error.hpp"
#include "loec/random.hpp"

namespace loec {
namespace {

constexpr int kMaxTries = 8;
constexpr double kMinCoverage = 0.05;
constexpr double kMaxCoverage = 0.80;
constexpr double kGammaExponent = 0.5;
constexpr double kClassTextureAmplitude = 0.12;

constexpr std::array<std::array<double, 3>, kNumClasses> kPalette{{
    {0.85, 0.25, 0.20},
    {0.20, 0.70, 0.30},
    {0.25, 0.35, 0.85},
    {0.85, 0.80, 0.20},
    {0.70, 0.30, 0.80},
    {0.20, 0.75, 0.80},
}};

enum class ShapeKind { kEllipse, kRectangle, kRing };

struct Geometry {
  ShapeKind kind;
  double cx, cy, rx, ry, angle;
};

Geometry sample_geometry(Rng& rng, ShapeKind kind, int h, int w) {
  const double s = std::min(h, w);
  Geometry g{};
  g.kind = kind;
  g.cx = rng.uniform(0.3, 0.7) * w;
  g.cy = rng.uniform(0.3, 0.7) * h;
  g.rx = rng.uniform(0.18, 0.34) * s;
  g.ry = rng.uniform(0.18, 0.34) * s;
  g.angle = rng.uniform(0.0, std::numbers::pi);
  return g;
}

BinaryMask rasterize(const Geometry& g, int h, int w) {
  BinaryMask m(h, w);
  const double ca = std::cos(g.angle);
  const double sa = std::sin(g.angle);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - g.cx;
      const double dy = y + 0.5 - g.cy;
      const double u = (ca * dx + sa * dy) / g.rx;
      const double v = (-sa * dx + ca * dy) / g.ry;
      bool inside = false;
      switch (g.kind) {
        case ShapeKind::kEllipse: inside = u * u + v * v <= 1.0; break;
        case ShapeKind::kRectangle: inside = std::abs(u) <= 1.0 && std::abs(v) <= 1.0; break;
        case ShapeKind::kRing: {
          const double r2 = u * u + v * v;
          inside = r2 <= 1.0 && r2 >= 0.25;
          break;
        }
      }
      m.at(y, x) = inside ? 1 : 0;
    }
  }
  return m;
}

BinaryMask sample_mask(Rng& rng, ShapeKind kind, int h, int w) {
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    const Geometry g = sample_geometry(rng, kind, h, w);
    BinaryMask m = rasterize(g, h, w);
    const double cover = static_cast<double>(m.foreground_count()) / static_cast<double>(m.size());
    if (cover >= kMinCoverage && cover <= kMaxCoverage) return m;
  }
  fail(ErrorCode::kDegenerate, "could not sample a mask with coverage in [5%, 80%] after " +
                                   std::to_string(kMaxTries) + " tries");
}

double texture_value(TextureFamily family, double x, double y, double phase, double period,
                     double angle, std::uint64_t speckle_key) {
  switch (family) {
    case TextureFamily::kFlat: return 0.0;
    case TextureFamily::kStripes: {
      const double t = x * std::cos(angle) + y * std::sin(angle);
      return std::sin(2.0 * std::numbers::pi * t / period + phase);
    }
    case TextureFamily::kChecker: {
      const int cx = static_cast<int>(std::floor((x + phase) / (period / 2.0)));
      const int cy = static_cast<int>(std::floor((y + phase) / (period / 2.0)));
      return ((cx + cy) & 1) ? 1.0 : -1.0;
    }
    case TextureFamily::kSpeckle: {
      const auto cell = static_cast<std::uint64_t>(static_cast<int>(y) * 4099 + static_cast<int>(x));
      return 2.0 * counter_uniform(speckle_key, cell) - 1.0;
    }
  }
  return 0.0;
}

struct Appearance {
  std::array<double, 3> fg;
  std::array<double, 3> bg;
  double class_phase;
  double domain_phase;
  double domain_angle;
  std::uint64_t speckle_key;
};

Appearance sample_appearance(Rng& rng, int class_id) {
  Appearance a{};
  for (int ch = 0; ch < 3; ++ch) a.fg[ch] = kPalette[class_id][ch] + rng.uniform(-0.05, 0.05);
  for (int ch = 0; ch < 3; ++ch) a.bg[ch] = rng.uniform(0.15, 0.85);
  a.class_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  a.domain_phase = rng.uniform(0.0, 8.0);
  a.domain_angle = rng.uniform(0.0, std::numbers::pi);
  a.speckle_key = static_cast<std::uint64_t>(rng.uniform() * 0x1.0p52);
  return a;
}

FeatureMap render(const BinaryMask& mask, int class_id, const Appearance& a,
                  const DomainSpec& domain, Rng& noise_rng) {
  const int h = mask.h;
  const int w = mask.w;
  FeatureMap img(Shape{1, 3, h, w});
  const double class_angle = class_id * std::numbers::pi / kNumClasses;
  const double class_period = 4.0 + class_id % 3;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool fg = mask.at(y, x) != 0;
      const double tex_class =
          fg ? kClassTextureAmplitude * texture_value(TextureFamily::kStripes, x, y, a.class_phase,
                                                      class_period, class_angle, 0)
             : 0.0;
      const double tex_domain =
          domain.texture_contrast * texture_value(domain.texture_family, x, y, a.domain_phase,
                                                  6.0, a.domain_angle, a.speckle_key);
      for (int ch = 0; ch < 3; ++ch) {
        double v = (fg ? a.fg[ch] : a.bg[ch]) + tex_class + tex_domain;
        v = std::clamp(v, 0.0, 1.0);
        switch (domain.intensity_transform) {
          case IntensityTransform::kNone: break;
          case IntensityTransform::kInvert: v = 1.0 - v; break;
          case IntensityTransform::kGamma: v = std::pow(v, kGammaExponent); break;
        }
        v += domain.color_cast[ch];
        if (domain.noise_sigma > 0.0) v += domain.noise_sigma * noise_rng.normal();
        img.at(0, ch, y, x) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

}  // namespace

BinaryMask::BinaryMask(int h_, int w_, std::uint8_t fill) : h(h_), w(w_) {
  require(h_ > 0 && w_ > 0, ErrorCode::kShape, "mask dimensions must be positive");
  values.assign(static_cast<std::size_t>(h_) * w_, fill);
}

std::size_t BinaryMask::foreground_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](auto v) { return v != 0; }));
}

BinaryMask downsample_nearest(const BinaryMask& mask, int out_h, int out_w) {
  if (out_h == mask.h && out_w == mask.w) return mask;
  BinaryMask out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(mask.h - 1, static_cast<int>((y + 0.5) * mask.h / out_h));
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(mask.w - 1, static_cast<int>((x + 0.5) * mask.w / out_w));
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

void DomainSpec::validate() const {
  for (double c : color_cast) {
    require(c >= -0.3 && c <= 0.3, ErrorCode::kConfig,
            "domain '" + name + "': color cast must lie in [-0.3, 0.3]");
  }
  require(noise_sigma >= 0.0, ErrorCode::kConfig, "domain '" + name + "': noise_sigma < 0");
  require(texture_contrast >= 0.0 && texture_contrast <= 1.0, ErrorCode::kConfig,
          "domain '" + name + "': texture_contrast outside [0, 1]");
}

DomainSpec source_domain() { return DomainSpec{"source"}; }

const std::vector<DomainSpec>& builtin_domains() {
  static const std::vector<DomainSpec> domains{
      source_domain(),
      {"shift1", TextureFamily::kSpeckle, IntensityTransform::kGamma, {0.0, 0.0, 0.0}, 0.02, 0.10},
      {"shift2", TextureFamily::kStripes, IntensityTransform::kNone, {0.10, -0.05, 0.0}, 0.03, 0.20},
      {"shift3", TextureFamily::kChecker, IntensityTransform::kInvert, {0.0, 0.05, 0.10}, 0.04, 0.25},
      {"shift4", TextureFamily::kChecker, IntensityTransform::kInvert, {0.20, -0.15, 0.10}, 0.06, 0.35},
  };
  return domains;
}

const DomainSpec& find_domain(const std::string& name) {
  for (const auto& d : builtin_domains()) {
    if (d.name == name) return d;
  }
  fail(ErrorCode::kConfig, "unknown domain '" + name + "'");
}

Episode generate_episode(std::uint64_t seed, const DomainSpec& domain, int shots, int h, int w) {
  require(h >= 16 && w >= 16, ErrorCode::kShape, "episode images must be at least 16x16");
  require(shots >= 1, ErrorCode::kShape, "episode needs at least one support shot");
  domain.validate();

  Rng geometry_rng(derive_seed(seed, 1));
  Rng appearance_rng(derive_seed(seed, 2));
  Rng noise_rng(derive_seed(seed ^ name_hash(domain.name), 3));

  Episode ep;
  ep.domain_id = domain.name;
  ep.class_id = geometry_rng.uniform_int(kNumClasses);
  const auto kind = static_cast<ShapeKind>(ep.class_id % 3);

  ep.query_mask = sample_mask(geometry_rng, kind, h, w);
  const Appearance query_look = sample_appearance(appearance_rng, ep.class_id);
  ep.query_image = render(ep.query_mask, ep.class_id, query_look, domain, noise_rng);

  ep.support.reserve(static_cast<std::size_t>(shots));
  for (int k = 0; k < shots; ++k) {
    BinaryMask m = sample_mask(geometry_rng, kind, h, w);
    const Appearance look = sample_appearance(appearance_rng, ep.class_id);
    FeatureMap img = render(m, ep.class_id, look, domain, noise_rng);
    ep.support.push_back({std::move(img), std::move(m)});
  }
  return ep;
}

}  // namespace loec
