#pragma once

#include <optional>
#include <vector>

#include "loec/compare.hpp"
#include "loec/encoder.hpp"
#include "loec/episode.hpp"

namespace loec {

/// How a selected patch is compared against the query feature.
enum class SimilarityMode {
  /// Flattened patch against every other flattened patch; the patch-level
  /// value is broadcast over the patch's pixels.
  kPatch,
  /// Mean feature vector of the patch against every pixel's feature vector.
  kPixel,
};

/// Test-time calibration of the foreground score from the low-level query
/// feature. w and beta are shared by all K selected patches.
struct CalibConfig {
  int k = 3;
  double w = 0.6;
  double beta = 0.7;
  int patch_size = 4;
  int tap = 1;
  SimilarityMode mode = SimilarityMode::kPatch;

  void validate() const;
};

/// Plain H x W grid of reals, row-major.
struct Grid {
  int h = 0;
  int w = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int h, int w, double fill = 0.0);
  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
};

/// Foreground minus background score, per pixel.
Grid confidence(const ScoreMap& score);

/// Mean confidence of each patch in row-major patch order. E_PATCH_DIV when H
/// or W is not a multiple of the patch size.
std::vector<double> patch_means(const Grid& conf, int patch_size);

/// Indices of the K patches with the largest mean confidence, descending;
/// ties go to the smaller row-major index. E_K_TOO_LARGE when K exceeds the
/// patch count.
std::vector<int> topk_patches(const Grid& conf, const CalibConfig& cfg);

/// One pixel-resolution similarity grid per selected patch, computed over a
/// (1, C, H, W) query feature already resized to the score-map size.
std::vector<Grid> similarity_maps(const FeatureMap& query_feature, const std::vector<int>& selected,
                                  const CalibConfig& cfg);

/// fg' = fg + sum_k w (Sim_k - beta); the background channel is untouched.
ScoreMap apply_similarity(const ScoreMap& score, const std::vector<Grid>& sims, double w, double beta);

/// Full calibration. `query_low` is the raw tap activation; it is resized to
/// the score-map resolution before patching.
ScoreMap calibrate(const ScoreMap& score, const FeatureMap& query_low, const CalibConfig& cfg);

/// Feature hooks applied to both branches at one boundary during evaluation
/// (used to inject probe noise).
struct BranchHooks {
  int boundary = 0;
  FeatureHook support;
  FeatureHook query;
};

/// Raw score map of an episode and, when a calibration config is given, its
/// calibrated counterpart computed from the same forward pass. With hooks, the
/// calibration reads the hooked query activation.
struct EpisodeScores {
  ScoreMap raw;
  std::optional<ScoreMap> calibrated;
};
EpisodeScores score_episode(const EncoderState& enc, const Episode& episode,
                            const std::optional<CalibConfig>& calib, const BranchHooks* hooks = nullptr);

/// Calibrated scores when `calib` is set, raw scores otherwise.
ScoreMap episode_scores(const EncoderState& enc, const Episode& episode,
                        const std::optional<CalibConfig>& calib, const BranchHooks* hooks = nullptr);

/// Forward both branches, compare, optionally calibrate, then argmax.
BinaryMask segment_episode(const EncoderState& enc, const Episode& episode,
                           const std::optional<CalibConfig>& calib);

}  // namespace loec
