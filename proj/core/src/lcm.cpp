#include "loec/lcm.hpp"

#include <algorithm>
#include <numeric>

#include "loec/error.hpp"
#include "loec/training.hpp"

namespace loec {
namespace {

struct PatchLayout {
  int rows;
  int cols;
  int size;
};

PatchLayout layout(int h, int w, int patch_size) {
  require(patch_size >= 1, ErrorCode::kPatchDiv, "patch size must be positive");
  if (h % patch_size != 0 || w % patch_size != 0) {
    fail(ErrorCode::kPatchDiv, std::to_string(h) + "x" + std::to_string(w) +
                                   " grid is not divisible by patch size " + std::to_string(patch_size));
  }
  return {h / patch_size, w / patch_size, patch_size};
}

// Flattened (channel, y, x) values of one patch.
std::vector<double> patch_vector(const FeatureMap& f, const PatchLayout& l, int patch) {
  const int py = patch / l.cols;
  const int px = patch % l.cols;
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(f.c()) * l.size * l.size);
  for (int c = 0; c < f.c(); ++c) {
    for (int y = 0; y < l.size; ++y) {
      for (int x = 0; x < l.size; ++x) v.push_back(f.at(0, c, py * l.size + y, px * l.size + x));
    }
  }
  return v;
}

std::vector<double> patch_mean_vector(const FeatureMap& f, const PatchLayout& l, int patch) {
  const int py = patch / l.cols;
  const int px = patch % l.cols;
  std::vector<double> v(static_cast<std::size_t>(f.c()), 0.0);
  for (int c = 0; c < f.c(); ++c) {
    double acc = 0.0;
    for (int y = 0; y < l.size; ++y) {
      for (int x = 0; x < l.size; ++x) acc += f.at(0, c, py * l.size + y, px * l.size + x);
    }
    v[static_cast<std::size_t>(c)] = acc / (l.size * l.size);
  }
  return v;
}

}  // namespace

void CalibConfig::validate() const {
  require(k >= 1, ErrorCode::kConfig, "lcm.k must be at least 1");
  require(patch_size >= 1, ErrorCode::kConfig, "lcm.patch must be at least 1");
  require(tap >= 0, ErrorCode::kConfig, "lcm.tap must be non-negative");
}

Grid::Grid(int h_, int w_, double fill)
    : h(h_), w(w_), values(static_cast<std::size_t>(h_) * w_, fill) {}

Grid confidence(const ScoreMap& score) {
  Grid c(score.h(), score.w());
  const auto bg = score.values.plane(0, 0);
  const auto fg = score.values.plane(0, 1);
  for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] = fg[i] - bg[i];
  return c;
}

std::vector<double> patch_means(const Grid& conf, int patch_size) {
  const PatchLayout l = layout(conf.h, conf.w, patch_size);
  std::vector<double> means(static_cast<std::size_t>(l.rows) * l.cols, 0.0);
  for (int y = 0; y < conf.h; ++y) {
    for (int x = 0; x < conf.w; ++x) {
      means[static_cast<std::size_t>((y / l.size) * l.cols + x / l.size)] += conf.at(y, x);
    }
  }
  for (auto& m : means) m /= static_cast<double>(l.size * l.size);
  return means;
}

std::vector<int> topk_patches(const Grid& conf, const CalibConfig& cfg) {
  const auto means = patch_means(conf, cfg.patch_size);
  if (cfg.k > static_cast<int>(means.size())) {
    fail(ErrorCode::kKTooLarge, "K = " + std::to_string(cfg.k) + " exceeds the " +
                                    std::to_string(means.size()) + " available patches");
  }
  std::vector<int> order(means.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + cfg.k, order.end(), [&](int a, int b) {
    const double ma = means[static_cast<std::size_t>(a)];
    const double mb = means[static_cast<std::size_t>(b)];
    return ma != mb ? ma > mb : a < b;
  });
  order.resize(static_cast<std::size_t>(cfg.k));
  return order;
}

std::vector<Grid> similarity_maps(const FeatureMap& query_feature, const std::vector<int>& selected,
                                  const CalibConfig& cfg) {
  require(query_feature.n() == 1, ErrorCode::kShape, "similarity_maps expects a single query feature");
  const PatchLayout l = layout(query_feature.h(), query_feature.w(), cfg.patch_size);
  const int patches = l.rows * l.cols;
  for (int p : selected) {
    require(p >= 0 && p < patches, ErrorCode::kShape, "selected patch index out of range");
  }

  std::vector<Grid> maps;
  maps.reserve(selected.size());
  if (cfg.mode == SimilarityMode::kPatch) {
    std::vector<std::vector<double>> vectors;
    vectors.reserve(static_cast<std::size_t>(patches));
    for (int p = 0; p < patches; ++p) vectors.push_back(patch_vector(query_feature, l, p));
    for (int sel : selected) {
      Grid g(query_feature.h(), query_feature.w());
      for (int m = 0; m < patches; ++m) {
        const double s = cosine(vectors[static_cast<std::size_t>(sel)], vectors[static_cast<std::size_t>(m)]);
        const int py = m / l.cols;
        const int px = m % l.cols;
        for (int y = 0; y < l.size; ++y) {
          for (int x = 0; x < l.size; ++x) g.at(py * l.size + y, px * l.size + x) = s;
        }
      }
      maps.push_back(std::move(g));
    }
  } else {
    std::vector<double> pixel(static_cast<std::size_t>(query_feature.c()));
    for (int sel : selected) {
      const auto proto = patch_mean_vector(query_feature, l, sel);
      Grid g(query_feature.h(), query_feature.w());
      for (int y = 0; y < g.h; ++y) {
        for (int x = 0; x < g.w; ++x) {
          for (int c = 0; c < query_feature.c(); ++c) pixel[static_cast<std::size_t>(c)] = query_feature.at(0, c, y, x);
          g.at(y, x) = cosine(proto, pixel);
        }
      }
      maps.push_back(std::move(g));
    }
  }
  return maps;
}

ScoreMap apply_similarity(const ScoreMap& score, const std::vector<Grid>& sims, double w, double beta) {
  ScoreMap out = score;
  if (w == 0.0) return out;
  auto fg = out.values.plane(0, 1);
  for (const auto& sim : sims) {
    require(sim.h == score.h() && sim.w == score.w(), ErrorCode::kShape,
            "similarity map does not match score map size");
    for (std::size_t i = 0; i < fg.size(); ++i) fg[i] += w * (sim.values[i] - beta);
  }
  return out;
}

ScoreMap calibrate(const ScoreMap& score, const FeatureMap& query_low, const CalibConfig& cfg) {
  cfg.validate();
  const FeatureMap resized = bilinear_resize(query_low, score.h(), score.w());
  const auto selected = topk_patches(confidence(score), cfg);
  return apply_similarity(score, similarity_maps(resized, selected, cfg), cfg.w, cfg.beta);
}

EpisodeScores score_episode(const EncoderState& enc, const Episode& episode,
                            const std::optional<CalibConfig>& calib, const BranchHooks* hooks) {
  std::vector<BinaryMask> masks;
  for (const auto& s : episode.support) masks.push_back(s.mask);
  const int boundary = hooks ? hooks->boundary : -1;
  const ForwardTrace support = forward_trace(enc, support_batch(episode), boundary,
                                             hooks ? hooks->support : FeatureHook{});
  const ForwardTrace query = forward_trace(enc, episode.query_image, boundary,
                                           hooks ? hooks->query : FeatureHook{});
  const Prototypes protos = prototypes(support.boundaries.back(), masks);
  EpisodeScores out{score_map(query.boundaries.back(), protos, episode.height(), episode.width()), {}};
  if (!calib) return out;
  require(calib->tap < static_cast<int>(query.boundaries.size()) - 1, ErrorCode::kConfig,
          "lcm.tap must name a boundary before the final stage");
  out.calibrated = calibrate(out.raw, query.boundaries[static_cast<std::size_t>(calib->tap)], *calib);
  return out;
}

ScoreMap episode_scores(const EncoderState& enc, const Episode& episode,
                        const std::optional<CalibConfig>& calib, const BranchHooks* hooks) {
  EpisodeScores s = score_episode(enc, episode, calib, hooks);
  return s.calibrated ? std::move(*s.calibrated) : std::move(s.raw);
}

BinaryMask segment_episode(const EncoderState& enc, const Episode& episode,
                           const std::optional<CalibConfig>& calib) {
  return predict(episode_scores(enc, episode, calib));
}

}  // namespace loec
