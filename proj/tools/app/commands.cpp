#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <regex>

#include "loec/checkpoint.hpp"
#include "loec/dataset.hpp"
#include "loec/error.hpp"
#include "loec/io.hpp"
#include "loec/random.hpp"

namespace loec::app {
namespace {

std::string episode_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ep%05d", index);
  return buf;
}

std::vector<Episode> usable_episodes(const Dataset& data, const std::string& domain) {
  const auto it = data.by_domain.find(domain);
  if (it == data.by_domain.end() || it->second.empty()) {
    fail(ErrorCode::kConfig, "dataset has no episodes for domain '" + domain + "'");
  }
  std::vector<Episode> out;
  for (const auto& ep : it->second) {
    if (usable_episode(ep)) out.push_back(ep);
  }
  if (out.empty()) fail(ErrorCode::kDegenerate, "no usable episodes for domain '" + domain + "'");
  return out;
}

// Checkpoints written by `train` are named epoch_NNN.ckpt; others report 0.
int checkpoint_epoch(const std::filesystem::path& checkpoint) {
  static const std::regex pattern(R"(.*epoch_(\d+)\.ckpt)");
  std::smatch m;
  const std::string name = checkpoint.filename().string();
  return std::regex_match(name, m, pattern) ? std::stoi(m[1]) : 0;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(derive_seed(seed, 0x6f72646572), static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
  }
  return order;
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg, std::ostream& log) {
  const auto root = cfg.dataset_root();
  std::vector<ManifestRow> rows;
  for (const auto& name : cfg.domains) {
    const DomainSpec& domain = find_domain(name);
    for (int i = 0; i < cfg.episodes_per_domain; ++i) {
      const Episode ep = generate_episode(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)), domain, cfg.shots,
                                          cfg.image_size, cfg.image_size);
      const auto written = write_episode(root, ep, episode_id(i));
      rows.insert(rows.end(), written.begin(), written.end());
    }
    log << name << ": " << cfg.episodes_per_domain << " episodes\n";
  }
  write_manifest(root / "manifest.csv", rows);
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto episodes = usable_episodes(load_dataset(cfg.dataset_root()), "source");
  EncoderState enc = make_encoder(cfg.run_seed, cfg.lem_enabled ? cfg.lem.tap : 1);
  set_frozen(enc, cfg.freeze);
  SgdState opt = SgdState::zeros_like(enc);
  const auto ckpt_dir = cfg.out_dir / "checkpoints";
  const auto ckpt_name = [](int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "epoch_%03d.ckpt", epoch);
    return std::string(buf);
  };
  save_checkpoint(enc, ckpt_dir / ckpt_name(0));

  const std::string variant = cfg.lem_enabled ? "lem" : "baseline";
  std::vector<MetricsRecord> records;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = epoch_order(episodes.size(), cfg.run_seed, epoch);
    double loss = 0.0;
    double score = 0.0;
    for (int i = 0; i < cfg.episodes_per_epoch; ++i) {
      const Episode& ep = episodes[order[static_cast<std::size_t>(i) % order.size()]];
      const auto draw = static_cast<std::uint64_t>(epoch - 1) * cfg.episodes_per_epoch + i;
      const StepResult r = train_step(enc, opt, ep, cfg.lem_enabled ? &cfg.lem : nullptr, draw, cfg.train);
      loss += r.loss;
      score += miou(r.prediction, ep.query_mask);
    }
    save_checkpoint(enc, ckpt_dir / ckpt_name(epoch));
    records.push_back({epoch, "source", cfg.episodes_per_epoch, score / cfg.episodes_per_epoch,
                       loss / cfg.episodes_per_epoch, 0.0, variant});
    log << "epoch " << epoch << ": loss " << fixed4(records.back().loss) << ", train mIoU "
        << fixed4(records.back().miou) << "\n";
  }
  write_file_atomic(cfg.out_dir / "train.csv", metrics_csv(records));
}

void cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& log) {
  const EncoderState enc = load_checkpoint(checkpoint);
  const Dataset data = load_dataset(cfg.dataset_root());
  const int epoch = checkpoint_epoch(checkpoint);
  std::vector<MetricsRecord> records;
  for (const auto& domain : cfg.domains) {
    const auto episodes = usable_episodes(data, domain);
    const EvalSummary s = evaluate(enc, episodes, cfg.calib(), cfg.train.temperature);
    const double m = cfg.lcm_enabled ? s.miou_calibrated : s.miou;
    const double l = cfg.lcm_enabled ? s.loss_calibrated : s.loss;
    records.push_back({epoch, domain, s.n_episodes, m, l, 0.0, cfg.variant()});
    log << domain << ": mIoU " << fixed4(m) << " over " << s.n_episodes << " episodes\n";
  }
  write_file_atomic(cfg.out_dir / "eval.csv", metrics_csv(records));
}

void cmd_probe(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& log) {
  const EncoderState enc = load_checkpoint(checkpoint);
  const auto episodes = usable_episodes(load_dataset(cfg.dataset_root()), cfg.probe_domain);
  const SharpnessProfile p =
      probe_sharpness(enc, episodes, cfg.probe_levels, cfg.probe_target, cfg.probe_seed, cfg.calib());
  for (std::size_t i = 0; i < p.levels.size(); ++i) {
    log << p.target.label() << " level " << format_double(p.levels[i]) << ": drop " << fixed4(p.drops[i])
        << "\n";
  }
  write_file_atomic(cfg.out_dir / "sharpness.csv", sharpness_csv(cfg.variant(), p));
}

void cmd_cka(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& log) {
  const EncoderState enc = load_checkpoint(checkpoint);
  const Matrix reference =
      pooled_features(enc, cka_images(source_domain(), cfg.cka_samples, cfg.image_size, cfg.run_seed));
  std::string csv = "variant,domain_a,domain_b,n_samples,cka\r\n";
  for (const auto& domain : cfg.domains) {
    const Matrix other =
        pooled_features(enc, cka_images(find_domain(domain), cfg.cka_samples, cfg.image_size, cfg.run_seed));
    const double value = linear_cka(reference, other);
    csv += csv_row({cfg.variant(), "source", domain, std::to_string(cfg.cka_samples), format_double(value)});
    log << "source vs " << domain << ": " << fixed4(value) << "\n";
  }
  write_file_atomic(cfg.out_dir / "cka.csv", csv);
}

void cmd_curve(const RunConfig& cfg, std::ostream& log) {
  const auto records = epoch_curve(cfg.curve());
  write_file_atomic(cfg.out_dir / "curve.csv", metrics_csv(records));
  log << records.size() << " curve rows written\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-level enhancement and calibration experiments for cross-domain few-shot segmentation"};
  app.require_subcommand(1);
  std::string config_path;
  std::string checkpoint;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  const auto add = [&](const char* name, const char* help, bool needs_checkpoint) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value configuration file");
    auto* ck = sub->add_option("--checkpoint", checkpoint, "encoder checkpoint");
    if (needs_checkpoint) ck->required();
    sub->add_option("--out", out_dir, "output directory (overrides run.out_dir)");
    sub->add_option("--seed", seed, "overrides 'seed' for gen-data and 'run.seed' otherwise");
    return sub;
  };
  CLI::App* gen = add("gen-data", "write synthetic episodes for every configured domain", false);
  CLI::App* train = add("train", "train on source episodes, one checkpoint per epoch", false);
  CLI::App* eval = add("eval", "per-domain mIoU of a checkpoint", true);
  CLI::App* probe = add("probe", "mIoU drop under seeded noise", true);
  CLI::App* cka = add("cka", "source-vs-domain linear CKA of pooled final features", true);
  CLI::App* curve = add("curve", "in-memory training with per-epoch evaluation on every domain", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig cfg = config_path.empty() ? parse_config("") : load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) {
      if (gen->parsed()) {
        cfg.seed = *seed;
      } else {
        cfg.run_seed = *seed;
      }
    }
    if (gen->parsed()) cmd_gen_data(cfg, out);
    if (train->parsed()) cmd_train(cfg, out);
    if (eval->parsed()) cmd_eval(cfg, checkpoint, out);
    if (probe->parsed()) cmd_probe(cfg, checkpoint, out);
    if (cka->parsed()) cmd_cka(cfg, checkpoint, out);
    if (curve->parsed()) cmd_curve(cfg, out);
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
  } catch (const std::filesystem::filesystem_error& e) {
    err << error_name(ErrorCode::kIo) << ": " << e.what() << "\n";
  }
  return 1;
}

}  // namespace loec::app
