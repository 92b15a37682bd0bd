#include "loec/analysis.hpp"

#include <cmath>
#include <map>

#include "loec/checkpoint.hpp"
#include "loec/error.hpp"
#include "loec/io.hpp"
#include "loec/parallel.hpp"
#include "loec/random.hpp"

namespace loec {
namespace {

constexpr int kEncoderStride = 4;

}  // namespace

bool usable_episode(const Episode& ep) {
  const int fh = ep.height() / kEncoderStride;
  const int fw = ep.width() / kEncoderStride;
  for (const auto& s : ep.support) {
    const auto m = downsample_nearest(s.mask, fh, fw);
    const auto fg = m.foreground_count();
    if (fg == 0 || fg == m.size()) return false;
  }
  return true;
}

namespace {

FeatureMap add_unit_noise(const FeatureMap& x, double level, std::uint64_t key) {
  FeatureMap out = x;
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += level * counter_normal(key, i);
  return out;
}

Matrix centered(const Matrix& m) {
  Matrix c = m;
  for (int j = 0; j < m.cols; ++j) {
    double mean = 0.0;
    for (int i = 0; i < m.rows; ++i) mean += m.at(i, j);
    mean /= m.rows;
    for (int i = 0; i < m.rows; ++i) c.at(i, j) -= mean;
  }
  return c;
}

// Frobenius norm of A^T B for row-aligned A, B.
double cross_frobenius(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (int p = 0; p < a.cols; ++p) {
    for (int q = 0; q < b.cols; ++q) {
      double s = 0.0;
      for (int i = 0; i < a.rows; ++i) s += a.at(i, p) * b.at(i, q);
      acc += s * s;
    }
  }
  return std::sqrt(acc);
}

}  // namespace

double miou(const BinaryMask& pred, const BinaryMask& gt) {
  require(pred.h == gt.h && pred.w == gt.w, ErrorCode::kShape, "miou: mask sizes differ");
  std::size_t inter[2] = {0, 0};
  std::size_t uni[2] = {0, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred.values[i] ? 1 : 0;
    const int g = gt.values[i] ? 1 : 0;
    if (p == g) {
      ++inter[p];
      ++uni[p];
    } else {
      ++uni[p];
      ++uni[g];
    }
  }
  double total = 0.0;
  for (int c = 0; c < 2; ++c) {
    total += uni[c] == 0 ? 1.0 : static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
  }
  return total / 2.0;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::string out = std::string(kMetricsHeader) + "\r\n";
  for (const auto& r : records) {
    out += csv_row({r.variant, std::to_string(r.epoch), r.domain, std::to_string(r.n_episodes),
                    format_double(r.perturb_level), format_double(r.miou), format_double(r.loss)});
  }
  return out;
}

EvalSummary evaluate(const EncoderState& enc, const std::vector<Episode>& episodes,
                     const std::optional<CalibConfig>& calib, double temperature,
                     const std::function<std::optional<BranchHooks>(std::size_t)>& hooks_for) {
  require(!episodes.empty(), ErrorCode::kConfig, "evaluation needs at least one episode");
  struct Row {
    double miou, loss, miou_cal, loss_cal;
  };
  std::vector<Row> rows(episodes.size());
  parallel_for(episodes.size(), [&](std::size_t i) {
    const auto& ep = episodes[i];
    std::optional<BranchHooks> hooks = hooks_for ? hooks_for(i) : std::nullopt;
    const EpisodeScores s = score_episode(enc, ep, calib, hooks ? &*hooks : nullptr);
    Row r{};
    r.miou = miou(predict(s.raw), ep.query_mask);
    r.loss = bce_loss(s.raw, ep.query_mask, temperature).loss;
    if (s.calibrated) {
      r.miou_cal = miou(predict(*s.calibrated), ep.query_mask);
      r.loss_cal = bce_loss(*s.calibrated, ep.query_mask, temperature).loss;
    }
    rows[i] = r;
  });
  EvalSummary sum;
  for (const auto& r : rows) {
    sum.miou += r.miou;
    sum.loss += r.loss;
    sum.miou_calibrated += r.miou_cal;
    sum.loss_calibrated += r.loss_cal;
  }
  const double n = static_cast<double>(rows.size());
  sum.miou /= n;
  sum.loss /= n;
  sum.miou_calibrated /= n;
  sum.loss_calibrated /= n;
  sum.n_episodes = static_cast<int>(rows.size());
  return sum;
}

std::string ProbeTarget::label() const {
  return boundary == 0 ? "pixels" : "stage" + std::to_string(boundary);
}

ProbeTarget ProbeTarget::parse(const std::string& text) {
  if (text == "pixels") return {0};
  for (int b = 1; b <= kNumStages; ++b) {
    if (text == "stage" + std::to_string(b)) return {b};
  }
  fail(ErrorCode::kConfig, "probe target must be 'pixels' or 'stage1'..'stage4', got '" + text + "'");
}

SharpnessProfile probe_sharpness(const EncoderState& enc, const std::vector<Episode>& episodes,
                                 const std::vector<double>& levels, ProbeTarget target,
                                 std::uint64_t seed, const std::optional<CalibConfig>& calib) {
  require(!levels.empty() && levels.front() == 0.0, ErrorCode::kConfig, "probe levels must start at 0");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    require(levels[i] > levels[i - 1], ErrorCode::kConfig, "probe levels must be strictly ascending");
  }
  require(target.boundary >= 0 && target.boundary <= kNumStages, ErrorCode::kConfig, "bad probe target");
  const double temperature = TrainConfig{}.temperature;
  auto pick = [&](const EvalSummary& s) { return calib ? s.miou_calibrated : s.miou; };

  SharpnessProfile p;
  p.target = target;
  p.levels = levels;
  p.miou_clean = pick(evaluate(enc, episodes, calib, temperature));
  for (double level : levels) {
    if (level == 0.0) {
      p.miou_perturbed.push_back(p.miou_clean);
      p.drops.push_back(0.0);
      continue;
    }
    const auto hooks_for = [&](std::size_t i) -> std::optional<BranchHooks> {
      const std::uint64_t key = derive_seed(seed, i);
      return BranchHooks{target.boundary,
                         [=](const FeatureMap& f) { return add_unit_noise(f, level, derive_seed(key, 1)); },
                         [=](const FeatureMap& f) { return add_unit_noise(f, level, derive_seed(key, 2)); }};
    };
    const double perturbed = pick(evaluate(enc, episodes, calib, temperature, hooks_for));
    p.miou_perturbed.push_back(perturbed);
    p.drops.push_back(p.miou_clean - perturbed);
  }
  return p;
}

std::string sharpness_csv(const std::string& variant, const SharpnessProfile& profile) {
  std::string out = std::string(kSharpnessHeader) + "\r\n";
  for (std::size_t i = 0; i < profile.levels.size(); ++i) {
    out += csv_row({variant, profile.target.label(), format_double(profile.levels[i]),
                    format_double(profile.miou_clean), format_double(profile.miou_perturbed[i]),
                    format_double(profile.drops[i])});
  }
  return out;
}

Matrix::Matrix(int r, int c, double fill)
    : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

double linear_cka(const Matrix& x, const Matrix& y) {
  require(x.rows == y.rows && x.cols == y.cols, ErrorCode::kShape, "linear_cka: matrix shapes differ");
  require(x.rows >= 2, ErrorCode::kShape, "linear_cka needs at least two rows");
  const Matrix xc = centered(x);
  const Matrix yc = centered(y);
  const double xx = cross_frobenius(xc, xc);
  const double yy = cross_frobenius(yc, yc);
  if (xx == 0.0 || yy == 0.0) return 0.0;
  const double yx = cross_frobenius(yc, xc);
  return std::clamp(yx * yx / (xx * yy), 0.0, 1.0);
}

Matrix pooled_features(const EncoderState& enc, const std::vector<FeatureMap>& images) {
  require(!images.empty(), ErrorCode::kShape, "pooled_features needs images");
  std::vector<std::vector<double>> rows(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    const FeatureMap deep = forward(enc, images[i]).deep;
    std::vector<double> r(static_cast<std::size_t>(deep.c()));
    for (int c = 0; c < deep.c(); ++c) {
      double acc = 0.0;
      for (double v : deep.plane(0, c)) acc += v;
      r[static_cast<std::size_t>(c)] = acc / static_cast<double>(deep.shape().plane());
    }
    rows[i] = std::move(r);
  });
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), m.values.begin() + static_cast<std::ptrdiff_t>(i * rows[i].size()));
  }
  return m;
}

std::uint64_t train_episode_seed(std::uint64_t seed, int epoch, int index, int per_epoch) {
  const auto counter = static_cast<std::uint64_t>(epoch) * static_cast<std::uint64_t>(per_epoch) +
                       static_cast<std::uint64_t>(index);
  return derive_seed(derive_seed(seed, 0x747261696e), counter);
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int index) {
  return derive_seed(derive_seed(seed, 0x6576616c), static_cast<std::uint64_t>(index));
}

std::vector<Episode> eval_episodes(const DomainSpec& domain, int count, int shots, int size,
                                   std::uint64_t seed) {
  std::vector<Episode> out;
  for (int i = 0; static_cast<int>(out.size()) < count; ++i) {
    Episode ep = generate_episode(eval_episode_seed(seed, i), domain, shots, size, size);
    if (usable_episode(ep)) out.push_back(std::move(ep));
  }
  return out;
}

std::vector<FeatureMap> cka_images(const DomainSpec& domain, int count, int size, std::uint64_t seed) {
  std::vector<FeatureMap> images;
  for (auto& ep : eval_episodes(domain, count, 1, size, seed)) images.push_back(std::move(ep.query_image));
  return images;
}

Variant Variant::parse(const std::string& name) {
  if (name == "baseline") return {false, false, name};
  if (name == "lem") return {true, false, name};
  if (name == "lcm") return {false, true, name};
  if (name == "lem+lcm") return {true, true, name};
  fail(ErrorCode::kConfig, "unknown variant '" + name + "' (expected baseline, lem, lcm or lem+lcm)");
}

std::vector<MetricsRecord> epoch_curve(const CurveConfig& cfg, std::vector<TrainedModel>* finals) {
  require(cfg.epochs >= 0, ErrorCode::kConfig, "run.epochs must be non-negative");
  require(cfg.episodes_per_epoch >= 1, ErrorCode::kConfig, "run.episodes_per_epoch must be positive");
  require(!cfg.variants.empty(), ErrorCode::kConfig, "no variants requested");
  std::vector<Variant> variants;
  for (const auto& v : cfg.variants) variants.push_back(Variant::parse(v));

  std::vector<std::pair<std::string, std::vector<Episode>>> eval_sets;
  for (const auto& name : cfg.domains) {
    eval_sets.emplace_back(name, eval_episodes(find_domain(name), cfg.eval_episodes, cfg.shots,
                                               cfg.image_size, cfg.seed));
  }
  const DomainSpec source = source_domain();

  std::vector<MetricsRecord> records;
  for (bool with_lem : {false, true}) {
    std::vector<const Variant*> members;
    bool any_lcm = false;
    for (const auto& v : variants) {
      if (v.lem == with_lem) {
        members.push_back(&v);
        any_lcm = any_lcm || v.lcm;
      }
    }
    if (members.empty()) continue;

    EncoderState enc = make_encoder(cfg.seed, with_lem ? cfg.lem.tap : 1);
    set_frozen(enc, cfg.freeze);
    SgdState opt = SgdState::zeros_like(enc);
    const std::optional<CalibConfig> calib = any_lcm ? std::optional(cfg.lcm) : std::nullopt;

    for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
      if (epoch > 0) {
        for (int i = 0; i < cfg.episodes_per_epoch; ++i) {
          const Episode ep = generate_episode(train_episode_seed(cfg.seed, epoch, i, cfg.episodes_per_epoch),
                                              source, cfg.shots, cfg.image_size, cfg.image_size);
          if (!usable_episode(ep)) continue;
          const auto draw = static_cast<std::uint64_t>(epoch) * cfg.episodes_per_epoch + i;
          train_step(enc, opt, ep, with_lem ? &cfg.lem : nullptr, draw, cfg.train);
        }
      }
      if (cfg.checkpoint_dir) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_epoch_%03d.ckpt", with_lem ? "lem" : "baseline", epoch);
        save_checkpoint(enc, *cfg.checkpoint_dir / name);
      }
      for (const auto& [domain, episodes] : eval_sets) {
        const EvalSummary s = evaluate(enc, episodes, calib, cfg.train.temperature);
        for (const Variant* v : members) {
          records.push_back({epoch, domain, s.n_episodes, v->lcm ? s.miou_calibrated : s.miou,
                             v->lcm ? s.loss_calibrated : s.loss, 0.0, v->name});
        }
      }
    }
    if (finals) finals->push_back({with_lem, std::move(enc)});
  }
  return records;
}

}  // namespace loec
