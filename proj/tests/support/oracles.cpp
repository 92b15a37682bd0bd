#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace oracle {

FeatureMap conv2d(const FeatureMap& x, const FeatureMap& w, int stride, int pad, const std::vector<double>& bias) {
  const int oh = (x.h() + 2 * pad - w.h()) / stride + 1;
  const int ow = (x.w() + 2 * pad - w.w()) / stride + 1;
  FeatureMap out({x.n(), w.n(), oh, ow});
  for (int n = 0; n < x.n(); ++n)
    for (int o = 0; o < w.n(); ++o)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (int i = 0; i < w.c(); ++i)
            for (int ky = 0; ky < w.h(); ++ky)
              for (int kx = 0; kx < w.w(); ++kx) {
                const int sy = y * stride + ky - pad;
                const int sx = xx * stride + kx - pad;
                if (sy < 0 || sy >= x.h() || sx < 0 || sx >= x.w()) continue;
                acc += x.at(n, i, sy, sx) * w.at(o, i, ky, kx);
              }
          out.at(n, o, y, xx) = acc;
        }
  return out;
}

std::vector<std::complex<double>> dft2(const std::vector<std::complex<double>>& x, int h, int w, bool inverse) {
  std::vector<std::complex<double>> out(x.size());
  const double sign = inverse ? 1.0 : -1.0;
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      std::complex<double> acc = 0.0;
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const double angle = sign * 2.0 * std::numbers::pi * (static_cast<double>(u * y) / h + static_cast<double>(v * xx) / w);
          acc += x[static_cast<std::size_t>(y * w + xx)] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
      out[static_cast<std::size_t>(u * w + v)] = inverse ? acc / static_cast<double>(h * w) : acc;
    }
  return out;
}

FeatureMap ifft2_real(const std::vector<std::complex<double>>& spectrum, int h, int w) {
  const auto z = dft2(spectrum, h, w, true);
  FeatureMap out({1, 1, h, w});
  for (int i = 0; i < h * w; ++i) out.data()[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)].real();
  return out;
}

double bilinear_sample(const FeatureMap& x, int n, int c, int out_h, int out_w, int oy, int ox) {
  // Centre of output pixel mapped into input coordinates.
  double sy = (oy + 0.5) * x.h() / out_h - 0.5;
  double sx = (ox + 0.5) * x.w() / out_w - 0.5;
  sy = std::max(sy, 0.0);
  sx = std::max(sx, 0.0);
  const int y0 = std::min(static_cast<int>(std::floor(sy)), x.h() - 1);
  const int x0 = std::min(static_cast<int>(std::floor(sx)), x.w() - 1);
  const int y1 = std::min(y0 + 1, x.h() - 1);
  const int x1 = std::min(x0 + 1, x.w() - 1);
  const double fy = std::min(sy - y0, 1.0);
  const double fx = std::min(sx - x0, 1.0);
  const double top = x.at(n, c, y0, x0) * (1 - fx) + x.at(n, c, y0, x1) * fx;
  const double bottom = x.at(n, c, y1, x0) * (1 - fx) + x.at(n, c, y1, x1) * fx;
  return top * (1 - fy) + bottom * fy;
}

FeatureMap bilinear_resize(const FeatureMap& x, int out_h, int out_w) {
  FeatureMap out({x.n(), x.c(), out_h, out_w});
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int y = 0; y < out_h; ++y)
        for (int xx = 0; xx < out_w; ++xx) out.at(n, c, y, xx) = bilinear_sample(x, n, c, out_h, out_w, y, xx);
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 0.0;
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

namespace {

bool nearest_fg(const BinaryMask& m, int fh, int fw, int y, int x) {
  const int sy = std::min(static_cast<int>((y + 0.5) * m.h / fh), m.h - 1);
  const int sx = std::min(static_cast<int>((x + 0.5) * m.w / fw), m.w - 1);
  return m.at(sy, sx) != 0;
}

std::vector<double> pixel_vector(const FeatureMap& f, int n, int y, int x) {
  std::vector<double> v;
  for (int c = 0; c < f.c(); ++c) v.push_back(f.at(n, c, y, x));
  return v;
}

}  // namespace

loec::Prototypes prototypes(const FeatureMap& support_deep, const std::vector<BinaryMask>& masks) {
  loec::Prototypes p{std::vector<double>(static_cast<std::size_t>(support_deep.c()), 0.0),
                     std::vector<double>(static_cast<std::size_t>(support_deep.c()), 0.0)};
  for (int k = 0; k < support_deep.n(); ++k) {
    std::vector<double> fg(p.fg.size(), 0.0), bg(p.bg.size(), 0.0);
    int nf = 0, nb = 0;
    for (int y = 0; y < support_deep.h(); ++y)
      for (int x = 0; x < support_deep.w(); ++x) {
        const bool is_fg = nearest_fg(masks[static_cast<std::size_t>(k)], support_deep.h(), support_deep.w(), y, x);
        auto& acc = is_fg ? fg : bg;
        (is_fg ? nf : nb) += 1;
        for (int c = 0; c < support_deep.c(); ++c) acc[static_cast<std::size_t>(c)] += support_deep.at(k, c, y, x);
      }
    for (std::size_t c = 0; c < fg.size(); ++c) {
      p.fg[c] += fg[c] / nf / support_deep.n();
      p.bg[c] += bg[c] / nb / support_deep.n();
    }
  }
  return p;
}

loec::ScoreMap score_map(const FeatureMap& query_deep, const loec::Prototypes& p, int out_h, int out_w) {
  FeatureMap low({1, 2, query_deep.h(), query_deep.w()});
  for (int y = 0; y < query_deep.h(); ++y)
    for (int x = 0; x < query_deep.w(); ++x) {
      const auto v = pixel_vector(query_deep, 0, y, x);
      low.at(0, 0, y, x) = cosine(v, p.bg);
      low.at(0, 1, y, x) = cosine(v, p.fg);
    }
  return loec::ScoreMap(oracle::bilinear_resize(low, out_h, out_w));
}

std::vector<int> topk(const std::vector<std::vector<double>>& conf, int patch, int k) {
  const int rows = static_cast<int>(conf.size()) / patch;
  const int cols = static_cast<int>(conf[0].size()) / patch;
  std::vector<std::pair<double, int>> means;
  for (int py = 0; py < rows; ++py)
    for (int px = 0; px < cols; ++px) {
      double s = 0;
      for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x) s += conf[static_cast<std::size_t>(py * patch + y)][static_cast<std::size_t>(px * patch + x)];
      means.emplace_back(s / (patch * patch), py * cols + px);
    }
  std::stable_sort(means.begin(), means.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<int> out;
  for (int i = 0; i < k; ++i) out.push_back(means[static_cast<std::size_t>(i)].second);
  return out;
}

std::vector<std::vector<std::vector<double>>> similarity_maps(const FeatureMap& f, const std::vector<int>& selected,
                                                              int patch) {
  const int cols = f.w() / patch;
  auto flatten = [&](int idx) {
    std::vector<double> v;
    const int py = idx / cols, px = idx % cols;
    for (int c = 0; c < f.c(); ++c)
      for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x) v.push_back(f.at(0, c, py * patch + y, px * patch + x));
    return v;
  };
  std::vector<std::vector<std::vector<double>>> maps;
  for (int s : selected) {
    const auto ref = flatten(s);
    std::vector<std::vector<double>> g(static_cast<std::size_t>(f.h()), std::vector<double>(static_cast<std::size_t>(f.w())));
    for (int y = 0; y < f.h(); ++y)
      for (int x = 0; x < f.w(); ++x) g[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = cosine(ref, flatten((y / patch) * cols + x / patch));
    maps.push_back(std::move(g));
  }
  return maps;
}

loec::ScoreMap calibrate(const loec::ScoreMap& s, const FeatureMap& low, int k, double w, double beta, int patch) {
  const FeatureMap f = oracle::bilinear_resize(low, s.h(), s.w());
  std::vector<std::vector<double>> conf(static_cast<std::size_t>(s.h()), std::vector<double>(static_cast<std::size_t>(s.w())));
  for (int y = 0; y < s.h(); ++y)
    for (int x = 0; x < s.w(); ++x) conf[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = s.fg(y, x) - s.bg(y, x);
  const auto maps = similarity_maps(f, topk(conf, patch, k), patch);
  loec::ScoreMap out = s;
  for (int y = 0; y < s.h(); ++y)
    for (int x = 0; x < s.w(); ++x) {
      double add = 0;
      for (const auto& m : maps) add += w * (m[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] - beta);
      out.fg(y, x) = s.fg(y, x) + add;
    }
  return out;
}

double miou(const BinaryMask& pred, const BinaryMask& gt) {
  double total = 0;
  for (int cls = 0; cls < 2; ++cls) {
    std::set<std::size_t> p, g;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if ((pred.values[i] != 0) == (cls == 1)) p.insert(i);
      if ((gt.values[i] != 0) == (cls == 1)) g.insert(i);
    }
    std::set<std::size_t> inter, uni = p;
    for (auto i : p)
      if (g.contains(i)) inter.insert(i);
    uni.insert(g.begin(), g.end());
    total += uni.empty() ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
  }
  return total / 2;
}

double linear_cka(const loec::Matrix& x, const loec::Matrix& y) {
  const int n = x.rows;
  auto gram = [n](const loec::Matrix& m) {
    std::vector<double> k(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int c = 0; c < m.cols; ++c) s += m.at(i, c) * m.at(j, c);
        k[static_cast<std::size_t>(i * n + j)] = s;
      }
    // H K H with H = I - 11^T / n.
    std::vector<double> row(static_cast<std::size_t>(n)), col(static_cast<std::size_t>(n));
    double all = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        row[static_cast<std::size_t>(i)] += k[static_cast<std::size_t>(i * n + j)] / n;
        col[static_cast<std::size_t>(j)] += k[static_cast<std::size_t>(i * n + j)] / n;
        all += k[static_cast<std::size_t>(i * n + j)] / (static_cast<double>(n) * n);
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) k[static_cast<std::size_t>(i * n + j)] += all - row[static_cast<std::size_t>(i)] - col[static_cast<std::size_t>(j)];
    return k;
  };
  const auto kx = gram(x), ky = gram(y);
  double xy = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < kx.size(); ++i) {
    xy += kx[i] * ky[i];
    xx += kx[i] * kx[i];
    yy += ky[i] * ky[i];
  }
  if (xx == 0 || yy == 0) return 0.0;
  return xy / std::sqrt(xx * yy);
}

FeatureMap random_map(std::mt19937_64& rng, loec::Shape shape, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  FeatureMap m(shape);
  for (double& v : m.data()) v = d(rng);
  return m;
}

BinaryMask random_mask(std::mt19937_64& rng, int h, int w, double p) {
  std::bernoulli_distribution d(p);
  BinaryMask m(h, w);
  for (auto& v : m.values) v = d(rng) ? 1 : 0;
  return m;
}

BinaryMask random_mixed_mask(std::mt19937_64& rng, int h, int w, int fh, int fw) {
  for (;;) {
    BinaryMask m = random_mask(rng, h, w);
    int fg = 0;
    for (int y = 0; y < fh; ++y)
      for (int x = 0; x < fw; ++x) fg += nearest_fg(m, fh, fw, y, x) ? 1 : 0;
    if (fg > 0 && fg < fh * fw) return m;
  }
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace oracle
