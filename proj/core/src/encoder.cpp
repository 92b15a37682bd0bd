#include "loec/encoder.hpp"

#include <cmath>

#include "loec/error.hpp"
#include "loec/random.hpp"

namespace loec {
namespace {

struct StageSpec {
  int in;
  int out;
  int stride;
  bool relu;
};

constexpr StageSpec kArchitecture[kNumStages] = {
    {3, 8, 1, true},
    {8, 16, 2, true},
    {16, 32, 1, true},
    {32, 32, 2, false},
};

double to_storage(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

std::size_t EncoderState::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.conv.weights.size() + s.bias.size();
  return n;
}

bool EncoderState::operator==(const EncoderState& other) const {
  if (stages.size() != other.stages.size() || tap_index != other.tap_index) return false;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& a = stages[i];
    const auto& b = other.stages[i];
    if (a.name != b.name || !(a.conv.weights == b.conv.weights) || a.bias != b.bias ||
        a.conv.stride != b.conv.stride || a.conv.padding != b.conv.padding || a.relu != b.relu) {
      return false;
    }
  }
  return true;
}

EncoderState make_encoder(std::uint64_t seed, int tap_index) {
  require(tap_index >= 0 && tap_index < kNumStages, ErrorCode::kConfig,
          "tap index must lie in [0, " + std::to_string(kNumStages - 1) + "]");
  EncoderState enc;
  enc.seed = seed;
  enc.tap_index = tap_index;
  Rng rng(derive_seed(seed, 0x656e63));
  for (int s = 0; s < kNumStages; ++s) {
    const auto& spec = kArchitecture[s];
    FeatureMap w(Shape{spec.out, spec.in, 3, 3});
    const double bound = std::sqrt(6.0 / (spec.in * 9.0));
    for (double& v : w.data()) v = to_storage(rng.uniform(-bound, bound));
    Stage st;
    st.name = "stage" + std::to_string(s + 1);
    st.conv = ConvKernel{std::move(w), spec.stride, 1};
    st.bias.assign(static_cast<std::size_t>(spec.out), 0.0);
    st.relu = spec.relu;
    enc.stages.push_back(std::move(st));
  }
  return enc;
}

void set_frozen(EncoderState& enc, const std::vector<std::string>& stage_names) {
  for (const auto& name : stage_names) {
    bool found = false;
    for (auto& s : enc.stages) {
      if (s.name == name) {
        s.frozen = true;
        found = true;
      }
    }
    require(found, ErrorCode::kConfig, "unknown stage '" + name + "' in freeze list");
  }
}

void round_to_storage(EncoderState& enc) {
  for (auto& s : enc.stages) {
    for (double& v : s.conv.weights.data()) v = to_storage(v);
    for (double& v : s.bias) v = to_storage(v);
  }
}

ForwardTrace forward_trace(const EncoderState& enc, const FeatureMap& image, int hook_boundary,
                           const FeatureHook& hook) {
  require(image.c() == enc.stages.front().conv.in_channels(), ErrorCode::kShape,
          "encoder expects " + std::to_string(enc.stages.front().conv.in_channels()) +
              "-channel input, got " + std::to_string(image.c()));
  ForwardTrace trace;
  trace.boundaries.reserve(enc.stages.size() + 1);
  FeatureMap centred = image;
  for (double& v : centred.data()) v -= kPixelMean;
  trace.boundaries.push_back(std::move(centred));
  for (std::size_t s = 0; s <= enc.stages.size(); ++s) {
    if (hook && static_cast<int>(s) == hook_boundary) {
      FeatureMap hooked = hook(trace.boundaries.back());
      require(hooked.shape() == trace.boundaries.back().shape(), ErrorCode::kShape,
              "feature hook must preserve shape");
      trace.boundaries.back() = std::move(hooked);
      trace.hooked_boundary = hook_boundary;
    }
    if (s == enc.stages.size()) break;
    const auto& st = enc.stages[s];
    FeatureMap out = conv2d(trace.boundaries.back(), st.conv, st.bias);
    if (st.relu) relu_inplace(out);
    trace.boundaries.push_back(std::move(out));
  }
  return trace;
}

Features forward(const EncoderState& enc, const FeatureMap& image, const FeatureHook& hook) {
  auto trace = forward_trace(enc, image, enc.tap_index, hook);
  return {std::move(trace.boundaries[static_cast<std::size_t>(enc.tap_index)]),
          std::move(trace.boundaries.back())};
}

EncoderGrads EncoderGrads::zeros_like(const EncoderState& enc) {
  EncoderGrads g;
  for (const auto& s : enc.stages) {
    g.weight.emplace_back(s.conv.weights.shape());
    g.bias.emplace_back(s.bias.size(), 0.0);
  }
  return g;
}

void backward(const EncoderState& enc, const ForwardTrace& trace, const FeatureMap& grad_deep,
              int stop_boundary, EncoderGrads& grads) {
  const int num_stages = static_cast<int>(enc.stages.size());
  require(static_cast<int>(trace.boundaries.size()) == num_stages + 1, ErrorCode::kShape,
          "trace does not match encoder depth");
  require(grad_deep.shape() == trace.boundaries.back().shape(), ErrorCode::kShape,
          "gradient does not match the deep feature shape");

  // Lowest stage that still needs a weight gradient.
  int lowest = num_stages;
  for (int s = std::max(stop_boundary, 0); s < num_stages; ++s) {
    if (!enc.stages[static_cast<std::size_t>(s)].frozen) {
      lowest = s;
      break;
    }
  }

  FeatureMap grad = grad_deep;
  for (int s = num_stages - 1; s >= lowest; --s) {
    const auto& st = enc.stages[static_cast<std::size_t>(s)];
    const auto& out = trace.boundaries[static_cast<std::size_t>(s) + 1];
    if (st.relu) {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (out.data()[i] <= 0.0) grad.data()[i] = 0.0;
      }
    }
    const auto& in = trace.boundaries[static_cast<std::size_t>(s)];
    if (!st.frozen) {
      conv2d_accumulate_grad_weight(grad, in, st.conv, grads.weight[static_cast<std::size_t>(s)],
                                    grads.bias[static_cast<std::size_t>(s)]);
    }
    if (s > lowest) grad = conv2d_grad_input(grad, st.conv, in.shape());
  }
}

}  // namespace loec
