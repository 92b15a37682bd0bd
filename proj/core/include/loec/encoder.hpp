#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "loec/tensor.hpp"

namespace loec {

/// One convolutional stage: 3x3 same-style conv, optional ReLU.
struct Stage {
  std::string name;
  ConvKernel conv;
  std::vector<double> bias;
  bool relu = true;
  bool frozen = false;
};

/// The feature extractor. Weights are kept at 32-bit precision (every update
/// is rounded to float) while all arithmetic runs in 64-bit.
///
/// Boundary indices: 0 is the input image, b >= 1 is the output of stage b.
/// `tap_index` names the boundary that exposes the low-level feature.
struct EncoderState {
  std::vector<Stage> stages;
  int tap_index = 1;
  std::uint64_t seed = 0;

  int num_boundaries() const noexcept { return static_cast<int>(stages.size()) + 1; }
  std::size_t parameter_count() const noexcept;
  bool operator==(const EncoderState& other) const;
};

inline constexpr int kNumStages = 4;

/// Subtracted from every input pixel; boundary 0 is the centred image.
inline constexpr double kPixelMean = 0.5;

/// Fixed four-stage stack (3->8 s1, 8->16 s2, 16->32 s1, 32->32 s2 without
/// ReLU), fan-in scaled uniform init from `seed`, zero biases.
EncoderState make_encoder(std::uint64_t seed, int tap_index = 1);

/// Sets the frozen flag on the named stages ("stage1".."stage4"); E_CONFIG on
/// unknown names.
void set_frozen(EncoderState& enc, const std::vector<std::string>& stage_names);

/// Rounds every weight and bias to the nearest float.
void round_to_storage(EncoderState& enc);

/// Optional transform of the tap activation before later stages consume it.
using FeatureHook = std::function<FeatureMap(const FeatureMap&)>;

struct Features {
  FeatureMap low_level;  // tap activation (after the hook, if any)
  FeatureMap deep;       // final stage output
};

/// Runs all stages. An empty hook leaves the tap activation unchanged.
Features forward(const EncoderState& enc, const FeatureMap& image, const FeatureHook& hook = {});

/// All boundary activations, index-aligned with boundary numbering.
struct ForwardTrace {
  std::vector<FeatureMap> boundaries;
  int hooked_boundary = -1;
};

ForwardTrace forward_trace(const EncoderState& enc, const FeatureMap& image, int hook_boundary = -1,
                           const FeatureHook& hook = {});

struct EncoderGrads {
  std::vector<FeatureMap> weight;
  std::vector<std::vector<double>> bias;

  static EncoderGrads zeros_like(const EncoderState& enc);
};

/// Accumulates parameter gradients given dL/d(deep). Gradient does not flow
/// below `stop_boundary`: stages whose input boundary is >= stop_boundary get
/// weight gradients, earlier stages get none from this branch.
void backward(const EncoderState& enc, const ForwardTrace& trace, const FeatureMap& grad_deep,
              int stop_boundary, EncoderGrads& grads);

}  // namespace loec
