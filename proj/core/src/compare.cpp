#include "loec/compare.hpp"

#include <cmath>
#include <string>

#include "loec/error.hpp"

namespace loec {
namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void check_masks(const FeatureMap& support_deep, std::span<const BinaryMask> masks) {
  require(static_cast<int>(masks.size()) == support_deep.n(), ErrorCode::kShape,
          "prototypes: " + std::to_string(masks.size()) + " masks for " +
              std::to_string(support_deep.n()) + " support features");
}

}  // namespace

ScoreMap::ScoreMap(FeatureMap v) : values(std::move(v)) {
  require(values.n() == 1 && values.c() == 2, ErrorCode::kShape, "score map must be (1, 2, H, W)");
}

ScoreMap::ScoreMap(int h, int w) : values(Shape{1, 2, h, w}) {}

Prototypes prototypes(const FeatureMap& support_deep, std::span<const BinaryMask> masks) {
  check_masks(support_deep, masks);
  const int c = support_deep.c();
  const int h = support_deep.h();
  const int w = support_deep.w();
  Prototypes p{std::vector<double>(static_cast<std::size_t>(c), 0.0),
               std::vector<double>(static_cast<std::size_t>(c), 0.0)};
  std::vector<double> fg(static_cast<std::size_t>(c)), bg(static_cast<std::size_t>(c));
  for (int k = 0; k < support_deep.n(); ++k) {
    const BinaryMask m = downsample_nearest(masks[static_cast<std::size_t>(k)], h, w);
    const std::size_t n_fg = m.foreground_count();
    const std::size_t n_bg = m.size() - n_fg;
    require(n_fg > 0, ErrorCode::kEmptyFg,
            "support shot " + std::to_string(k) + " has no foreground at feature resolution");
    require(n_bg > 0, ErrorCode::kEmptyBg,
            "support shot " + std::to_string(k) + " has no background at feature resolution");
    std::fill(fg.begin(), fg.end(), 0.0);
    std::fill(bg.begin(), bg.end(), 0.0);
    for (int ch = 0; ch < c; ++ch) {
      const auto plane = support_deep.plane(k, ch);
      for (std::size_t i = 0; i < plane.size(); ++i) {
        (m.values[i] ? fg : bg)[static_cast<std::size_t>(ch)] += plane[i];
      }
    }
    for (int ch = 0; ch < c; ++ch) {
      p.fg[static_cast<std::size_t>(ch)] += fg[static_cast<std::size_t>(ch)] / static_cast<double>(n_fg);
      p.bg[static_cast<std::size_t>(ch)] += bg[static_cast<std::size_t>(ch)] / static_cast<double>(n_bg);
    }
  }
  const double shots = support_deep.n();
  for (auto& v : p.fg) v /= shots;
  for (auto& v : p.bg) v /= shots;
  return p;
}

ScoreMap score_map(const FeatureMap& query_deep, const Prototypes& protos, int out_h, int out_w) {
  const int c = query_deep.c();
  require(query_deep.n() == 1, ErrorCode::kShape, "score_map expects a single query");
  require(static_cast<int>(protos.fg.size()) == c && static_cast<int>(protos.bg.size()) == c,
          ErrorCode::kShape, "prototype length does not match query channels");
  FeatureMap low(Shape{1, 2, query_deep.h(), query_deep.w()});
  std::vector<double> q(static_cast<std::size_t>(c));
  const std::size_t plane = query_deep.shape().plane();
  for (std::size_t i = 0; i < plane; ++i) {
    for (int ch = 0; ch < c; ++ch) q[static_cast<std::size_t>(ch)] = query_deep.plane(0, ch)[i];
    low.plane(0, 0)[i] = cosine(q, protos.bg);
    low.plane(0, 1)[i] = cosine(q, protos.fg);
  }
  return ScoreMap(bilinear_resize(low, out_h, out_w));
}

LossResult bce_loss(const ScoreMap& score, const BinaryMask& gt, double temperature) {
  require(gt.h == score.h() && gt.w == score.w(), ErrorCode::kShape, "bce_loss: mask/score size mismatch");
  require(temperature > 0.0, ErrorCode::kShape, "bce_loss: temperature must be positive");
  LossResult r{0.0, ScoreMap(score.h(), score.w())};
  const double n = static_cast<double>(gt.size());
  const auto bg = score.values.plane(0, 0);
  const auto fg = score.values.plane(0, 1);
  auto gbg = r.grad.values.plane(0, 0);
  auto gfg = r.grad.values.plane(0, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double z = temperature * (fg[i] - bg[i]);
    const double y = gt.values[i] ? 1.0 : 0.0;
    acc += y > 0 ? softplus(-z) : softplus(z);
    const double dz = (sigmoid(z) - y) / n;
    gfg[i] = temperature * dz;
    gbg[i] = -temperature * dz;
  }
  r.loss = acc / n;
  return r;
}

BinaryMask predict(const ScoreMap& score) {
  BinaryMask m(score.h(), score.w());
  const auto bg = score.values.plane(0, 0);
  const auto fg = score.values.plane(0, 1);
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = fg[i] > bg[i] ? 1 : 0;
  return m;
}

ScoreMapGrads score_map_backward(const FeatureMap& query_deep, const Prototypes& protos,
                                 const ScoreMap& grad_score) {
  const int c = query_deep.c();
  const Shape low_shape{1, 2, query_deep.h(), query_deep.w()};
  const FeatureMap g_low = bilinear_resize_grad(grad_score.values, low_shape);

  ScoreMapGrads out{FeatureMap(query_deep.shape()),
                    {std::vector<double>(static_cast<std::size_t>(c), 0.0),
                     std::vector<double>(static_cast<std::size_t>(c), 0.0)}};
  const double nfg = norm(protos.fg);
  const double nbg = norm(protos.bg);
  std::vector<double> q(static_cast<std::size_t>(c));
  const std::size_t plane = query_deep.shape().plane();

  for (std::size_t i = 0; i < plane; ++i) {
    for (int ch = 0; ch < c; ++ch) q[static_cast<std::size_t>(ch)] = query_deep.plane(0, ch)[i];
    const double nq = norm(q);
    if (nq == 0.0) continue;
    // d cos(q, p) / dq = p / (|q||p|) - cos q / |q|^2, and symmetrically for p.
    auto accumulate = [&](const std::vector<double>& p, double np, double g, std::vector<double>& gp) {
      if (np == 0.0 || g == 0.0) return;
      const double cs = dot(q, p) / (nq * np);
      for (int ch = 0; ch < c; ++ch) {
        const auto u = static_cast<std::size_t>(ch);
        out.query_deep.plane(0, ch)[i] += g * (p[u] / (nq * np) - cs * q[u] / (nq * nq));
        gp[u] += g * (q[u] / (nq * np) - cs * p[u] / (np * np));
      }
    };
    accumulate(protos.bg, nbg, g_low.plane(0, 0)[i], out.protos.bg);
    accumulate(protos.fg, nfg, g_low.plane(0, 1)[i], out.protos.fg);
  }
  return out;
}

FeatureMap prototypes_backward(const FeatureMap& support_deep, std::span<const BinaryMask> masks,
                               const Prototypes& grad_protos) {
  check_masks(support_deep, masks);
  FeatureMap g(support_deep.shape());
  const double shots = support_deep.n();
  for (int k = 0; k < support_deep.n(); ++k) {
    const BinaryMask m = downsample_nearest(masks[static_cast<std::size_t>(k)], support_deep.h(), support_deep.w());
    const std::size_t n_fg = m.foreground_count();
    const std::size_t n_bg = m.size() - n_fg;
    require(n_fg > 0, ErrorCode::kEmptyFg, "support shot has no foreground at feature resolution");
    require(n_bg > 0, ErrorCode::kEmptyBg, "support shot has no background at feature resolution");
    for (int ch = 0; ch < support_deep.c(); ++ch) {
      const double gf = grad_protos.fg[static_cast<std::size_t>(ch)] / (shots * static_cast<double>(n_fg));
      const double gb = grad_protos.bg[static_cast<std::size_t>(ch)] / (shots * static_cast<double>(n_bg));
      auto plane = g.plane(k, ch);
      for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = m.values[i] ? gf : gb;
    }
  }
  return g;
}

}  // namespace loec
