#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "loec/compare.hpp"
#include "loec/encoder.hpp"
#include "loec/episode.hpp"
#include "loec/lem.hpp"

namespace loec {

struct TrainConfig {
  double lr = 1e-3;
  double momentum = 0.9;
  /// Scale applied to cosine scores before the two-way softmax.
  double temperature = 10.0;
};

/// Momentum buffers, one per parameter tensor.
struct SgdState {
  std::vector<FeatureMap> weight_velocity;
  std::vector<std::vector<double>> bias_velocity;

  static SgdState zeros_like(const EncoderState& enc);
};

/// Transform applied to the support branch at `boundary`. Its output is
/// treated as a constant on the backward pass.
struct SupportPerturbation {
  int boundary = 1;
  FeatureHook hook;
};

struct EpisodeGradients {
  double loss = 0.0;
  EncoderGrads grads;
  ScoreMap score;
};

/// Loss and parameter gradients for one episode (support shots batched).
EpisodeGradients episode_gradients(const EncoderState& enc, const Episode& episode,
                                   const SupportPerturbation* perturbation, double temperature);

/// Forward-only loss, used by finite-difference checks.
double episode_loss(const EncoderState& enc, const Episode& episode,
                    const SupportPerturbation* perturbation, double temperature);

/// v = momentum * v + g; w -= lr * v on non-frozen stages, then rounds the
/// updated tensors to storage precision.
void sgd_update(EncoderState& enc, SgdState& state, const EncoderGrads& grads, double lr,
                double momentum);

/// Stacks the support images of an episode into one (K, 3, H, W) batch.
FeatureMap support_batch(const Episode& episode);

struct StepResult {
  double loss = 0.0;
  BinaryMask prediction;
  bool perturbed = false;
};

/// One episodic SGD step. With `lem`, the support feature at lem->tap is
/// perturbed using draw `draw_index`; no gradient flows through the module.
StepResult train_step(EncoderState& enc, SgdState& state, const Episode& episode,
                      const LemConfig* lem, std::uint64_t draw_index, const TrainConfig& cfg);

}  // namespace loec
