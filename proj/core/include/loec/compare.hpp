#pragma once

#include <span>
#include <vector>

#include "loec/episode.hpp"
#include "loec/tensor.hpp"

namespace loec {

/// Two-channel score grid, stored as a (1, 2, H, W) map: channel 0 is the
/// background similarity and channel 1 the foreground similarity.
struct ScoreMap {
  FeatureMap values;

  ScoreMap() = default;
  explicit ScoreMap(FeatureMap v);
  ScoreMap(int h, int w);

  int h() const noexcept { return values.h(); }
  int w() const noexcept { return values.w(); }
  double& bg(int y, int x) noexcept { return values.at(0, 0, y, x); }
  double bg(int y, int x) const noexcept { return values.at(0, 0, y, x); }
  double& fg(int y, int x) noexcept { return values.at(0, 1, y, x); }
  double fg(int y, int x) const noexcept { return values.at(0, 1, y, x); }
};

struct Prototypes {
  std::vector<double> fg;
  std::vector<double> bg;
};

/// Masked average pooling. `support_deep` is (K, C, h, w) and `masks` holds K
/// image-resolution masks, each downsampled to (h, w) by nearest neighbour.
/// Per-shot prototypes are averaged over shots. E_EMPTY_FG / E_EMPTY_BG when
/// a downsampled mask loses a class.
Prototypes prototypes(const FeatureMap& support_deep, std::span<const BinaryMask> masks);

/// Per-position cosine similarity of a (1, C, h, w) query feature to each
/// prototype, bilinearly upsampled to (out_h, out_w).
ScoreMap score_map(const FeatureMap& query_deep, const Prototypes& protos, int out_h, int out_w);

struct LossResult {
  double loss = 0.0;
  ScoreMap grad;  // dLoss/dScore
};

/// Mean pixel BCE of the two-way softmax over temperature-scaled scores.
LossResult bce_loss(const ScoreMap& score, const BinaryMask& gt, double temperature);

/// Per-pixel argmax; exact ties go to background.
BinaryMask predict(const ScoreMap& score);

/// Gradients through score_map: given dL/dScore, produce dL/d(query_deep) and
/// dL/d(prototypes).
struct ScoreMapGrads {
  FeatureMap query_deep;
  Prototypes protos;
};
ScoreMapGrads score_map_backward(const FeatureMap& query_deep, const Prototypes& protos,
                                 const ScoreMap& grad_score);

/// Gradient of the prototypes with respect to the (K, C, h, w) support feature.
FeatureMap prototypes_backward(const FeatureMap& support_deep, std::span<const BinaryMask> masks,
                               const Prototypes& grad_protos);

}  // namespace loec
