#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loec/encoder.hpp"
#include "loec/episode.hpp"
#include "loec/lcm.hpp"
#include "loec/lem.hpp"
#include "loec/training.hpp"

namespace loec {

/// True when every support mask keeps both classes after downsampling to
/// the encoder's feature resolution, i.e. prototypes can be formed.
bool usable_episode(const Episode& ep);

/// Mean IoU over {background, foreground}. A class absent from both masks
/// counts as IoU 1.
double miou(const BinaryMask& pred, const BinaryMask& gt);

inline constexpr const char* kMetricsHeader = "variant,epoch,domain,n_episodes,perturb_level,miou,loss";
inline constexpr const char* kSharpnessHeader = "variant,target,level,miou_clean,miou_perturbed,drop";

struct MetricsRecord {
  int epoch = 0;
  std::string domain;
  int n_episodes = 0;
  double miou = 0.0;
  double loss = 0.0;
  double perturb_level = 0.0;
  std::string variant;
};

std::string metrics_csv(const std::vector<MetricsRecord>& records);

struct EvalSummary {
  double miou = 0.0;
  double loss = 0.0;
  /// Present when evaluated with a calibration config.
  double miou_calibrated = 0.0;
  double loss_calibrated = 0.0;
  int n_episodes = 0;
};

/// Mean mIoU and BCE over a fixed episode set, parallel over episodes.
/// `hooks_for(i)` optionally supplies per-episode feature hooks.
EvalSummary evaluate(const EncoderState& enc, const std::vector<Episode>& episodes,
                     const std::optional<CalibConfig>& calib, double temperature,
                     const std::function<std::optional<BranchHooks>(std::size_t)>& hooks_for = {});

/// Where probe noise is injected: boundary 0 is the input pixels, boundary b
/// the output of stage b.
struct ProbeTarget {
  int boundary = 0;

  std::string label() const;
  static ProbeTarget parse(const std::string& text);
};

struct SharpnessProfile {
  ProbeTarget target;
  std::vector<double> levels;
  double miou_clean = 0.0;
  std::vector<double> miou_perturbed;
  std::vector<double> drops;
};

/// Adds seeded Gaussian noise of std `level` at the target on both branches
/// and records the mIoU drop against the clean run. The same episodes and the
/// same unit-noise draws are used at every level.
SharpnessProfile probe_sharpness(const EncoderState& enc, const std::vector<Episode>& episodes,
                                 const std::vector<double>& levels, ProbeTarget target,
                                 std::uint64_t seed, const std::optional<CalibConfig>& calib = {});

std::string sharpness_csv(const std::string& variant, const SharpnessProfile& profile);

/// Dense row-major matrix for representation-similarity work.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0);
  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

/// Linear CKA on column-centred inputs:
/// ||Y^T X||_F^2 / (||X^T X||_F ||Y^T Y||_F), or 0 if a denominator vanishes.
double linear_cka(const Matrix& x, const Matrix& y);

/// One row per image: the final-stage activation average-pooled over space.
Matrix pooled_features(const EncoderState& enc, const std::vector<FeatureMap>& images);

/// Query images of `count` evaluation episodes (paired seeds across domains).
std::vector<FeatureMap> cka_images(const DomainSpec& domain, int count, int size, std::uint64_t seed);

/// Everything needed to run a source-training / target-evaluation experiment
/// in memory.
struct CurveConfig {
  std::vector<std::string> domains{"source", "shift1", "shift2", "shift3", "shift4"};
  std::vector<std::string> variants{"baseline"};
  int epochs = 10;
  int episodes_per_epoch = 100;
  int eval_episodes = 40;
  int shots = 1;
  int image_size = 32;
  std::uint64_t seed = 42;
  TrainConfig train;
  LemConfig lem;
  CalibConfig lcm;
  std::vector<std::string> freeze;
  /// When set, a checkpoint per epoch and training regime is written here.
  std::optional<std::filesystem::path> checkpoint_dir;
};

/// Training-episode seed for (epoch, index) and evaluation-episode seed for
/// index; evaluation seeds are shared by every domain.
std::uint64_t train_episode_seed(std::uint64_t seed, int epoch, int index, int per_epoch);
std::uint64_t eval_episode_seed(std::uint64_t seed, int index);

std::vector<Episode> eval_episodes(const DomainSpec& domain, int count, int shots, int size,
                                   std::uint64_t seed);

struct TrainedModel {
  bool lem = false;
  EncoderState enc;
};

/// Trains one model per training regime among the requested variants and
/// evaluates every variant on every domain after each epoch (epoch 0 is the
/// initialised model). Final encoders are appended to `finals` when given.
std::vector<MetricsRecord> epoch_curve(const CurveConfig& cfg, std::vector<TrainedModel>* finals = nullptr);

/// Parses "baseline|lem|lcm|lem+lcm"; E_CONFIG otherwise.
struct Variant {
  bool lem = false;
  bool lcm = false;
  std::string name;
  static Variant parse(const std::string& name);
};

}  // namespace loec
