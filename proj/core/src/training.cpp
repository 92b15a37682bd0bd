#include "loec/training.hpp"

#include <algorithm>

#include "loec/error.hpp"

namespace loec {
namespace {

std::vector<BinaryMask> support_masks(const Episode& ep) {
  std::vector<BinaryMask> masks;
  masks.reserve(ep.support.size());
  for (const auto& s : ep.support) masks.push_back(s.mask);
  return masks;
}

struct EpisodeForward {
  ForwardTrace support;
  ForwardTrace query;
  std::vector<BinaryMask> masks;
  Prototypes protos;
  ScoreMap score;
};

EpisodeForward run_forward(const EncoderState& enc, const Episode& episode,
                           const SupportPerturbation* perturbation) {
  EpisodeForward f;
  f.masks = support_masks(episode);
  f.support = perturbation
                  ? forward_trace(enc, support_batch(episode), perturbation->boundary, perturbation->hook)
                  : forward_trace(enc, support_batch(episode));
  f.query = forward_trace(enc, episode.query_image);
  f.protos = prototypes(f.support.boundaries.back(), f.masks);
  f.score = score_map(f.query.boundaries.back(), f.protos, episode.height(), episode.width());
  return f;
}

}  // namespace

SgdState SgdState::zeros_like(const EncoderState& enc) {
  SgdState s;
  for (const auto& st : enc.stages) {
    s.weight_velocity.emplace_back(st.conv.weights.shape());
    s.bias_velocity.emplace_back(st.bias.size(), 0.0);
  }
  return s;
}

FeatureMap support_batch(const Episode& episode) {
  require(!episode.support.empty(), ErrorCode::kShape, "episode has no support shots");
  const Shape one = episode.support.front().image.shape();
  FeatureMap batch(Shape{episode.shots(), one.c, one.h, one.w});
  auto dst = batch.data().begin();
  for (const auto& s : episode.support) {
    require(s.image.shape() == one, ErrorCode::kShape, "support images differ in shape");
    dst = std::copy(s.image.data().begin(), s.image.data().end(), dst);
  }
  return batch;
}

EpisodeGradients episode_gradients(const EncoderState& enc, const Episode& episode,
                                   const SupportPerturbation* perturbation, double temperature) {
  EpisodeForward f = run_forward(enc, episode, perturbation);
  LossResult lr = bce_loss(f.score, episode.query_mask, temperature);

  EpisodeGradients out{lr.loss, EncoderGrads::zeros_like(enc), std::move(f.score)};
  const ScoreMapGrads sg = score_map_backward(f.query.boundaries.back(), f.protos, lr.grad);
  const FeatureMap g_support = prototypes_backward(f.support.boundaries.back(), f.masks, sg.protos);

  backward(enc, f.query, sg.query_deep, 0, out.grads);
  backward(enc, f.support, g_support, perturbation ? perturbation->boundary : 0, out.grads);
  return out;
}

double episode_loss(const EncoderState& enc, const Episode& episode,
                    const SupportPerturbation* perturbation, double temperature) {
  const EpisodeForward f = run_forward(enc, episode, perturbation);
  return bce_loss(f.score, episode.query_mask, temperature).loss;
}

void sgd_update(EncoderState& enc, SgdState& state, const EncoderGrads& grads, double lr,
                double momentum) {
  for (std::size_t s = 0; s < enc.stages.size(); ++s) {
    auto& st = enc.stages[s];
    if (st.frozen) continue;
    auto w = st.conv.weights.data();
    auto vw = state.weight_velocity[s].data();
    const auto gw = grads.weight[s].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      vw[i] = momentum * vw[i] + gw[i];
      w[i] = static_cast<float>(w[i] - lr * vw[i]);
    }
    auto& vb = state.bias_velocity[s];
    for (std::size_t i = 0; i < st.bias.size(); ++i) {
      vb[i] = momentum * vb[i] + grads.bias[s][i];
      st.bias[i] = static_cast<float>(st.bias[i] - lr * vb[i]);
    }
  }
}

StepResult train_step(EncoderState& enc, SgdState& state, const Episode& episode,
                      const LemConfig* lem, std::uint64_t draw_index, const TrainConfig& cfg) {
  require(cfg.lr >= 0.0, ErrorCode::kConfig, "learning rate must be non-negative");
  StepResult result;
  std::optional<SupportPerturbation> perturbation;
  if (lem != nullptr && lem_fires(*lem, draw_index)) {
    const LemConfig lem_cfg = *lem;
    perturbation = SupportPerturbation{
        lem_cfg.tap, [lem_cfg, draw_index](const FeatureMap& f) { return apply_lem(f, lem_cfg, draw_index); }};
    result.perturbed = true;
  }
  EpisodeGradients g = episode_gradients(enc, episode, perturbation ? &*perturbation : nullptr,
                                         cfg.temperature);
  result.loss = g.loss;
  result.prediction = predict(g.score);
  sgd_update(enc, state, g.grads, cfg.lr, cfg.momentum);
  return result;
}

}  // namespace loec
