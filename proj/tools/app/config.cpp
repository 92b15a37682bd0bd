#include "config.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "loec/error.hpp"
#include "loec/io.hpp"

namespace loec::app {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  fail(ErrorCode::kConfig, key + ": " + why + " (got '" + value + "')");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, value, "expected a number");
  return out;
}

int parse_int(const std::string& key, const std::string& value, int min) {
  const int v = parse_number<int>(key, value);
  if (v < min) bad_value(key, value, "must be at least " + std::to_string(min));
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  const double v = parse_number<double>(key, value);
  if (!std::isfinite(v)) bad_value(key, value, "must be finite");
  return v;
}

double parse_nonneg(const std::string& key, const std::string& value) {
  const double v = parse_real(key, value);
  if (v < 0.0) bad_value(key, value, "must be non-negative");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "expected true or false");
}

std::vector<std::string> parse_list(const std::string& key, const std::string& value, bool allow_empty) {
  std::vector<std::string> items;
  if (value.empty()) {
    if (!allow_empty) bad_value(key, value, "must not be empty");
    return items;
  }
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_value(key, value, "empty list item");
    items.push_back(item);
  }
  return items;
}

}  // namespace

const std::vector<KeyDoc>& config_schema() {
  static const std::vector<KeyDoc> schema = {
      {"domains", "source,shift1,shift2,shift3,shift4", "domains generated, evaluated and compared"},
      {"shots", "1", "support shots per generated episode"},
      {"image_size", "32", "height and width of generated images"},
      {"episodes_per_domain", "40", "episodes written per domain by gen-data"},
      {"seed", "42", "data generation seed"},
      {"data_dir", "", "dataset root (default <run.out_dir>/data)"},
      {"run.seed", "42", "initialisation, episode order and evaluation seed"},
      {"run.epochs", "10", "training epochs"},
      {"run.episodes_per_epoch", "100", "training episodes per epoch"},
      {"run.eval_episodes", "40", "evaluation episodes per domain for curve"},
      {"run.lr", "0.001", "SGD learning rate"},
      {"run.momentum", "0.9", "SGD momentum"},
      {"run.temperature", "10", "score scale before the two-way softmax"},
      {"run.shots", "1", "support shots for in-memory episodes (curve)"},
      {"run.out_dir", "out", "output directory"},
      {"freeze", "", "comma-separated stages kept fixed during training"},
      {"lem.enabled", "false", "perturb low-level support features while training"},
      {"lem.sigma", "0.1", "std of random convolution weights"},
      {"lem.kernel_size", "3", "odd random convolution kernel size"},
      {"lem.tap", "1", "stage boundary perturbed (0 = input pixels)"},
      {"lem.fourier", "true", "recombine perturbed amplitude with original phase"},
      {"lem.prob", "1", "probability an episode is perturbed"},
      {"lem.per_shot", "false", "separate random kernel per support shot"},
      {"lem.seed", "7", "seed of the random kernels"},
      {"lcm.enabled", "false", "calibrate scores from low-level query features"},
      {"lcm.k", "3", "number of reliable patches"},
      {"lcm.w", "0.6", "weight of each similarity map"},
      {"lcm.beta", "0.7", "similarity bias"},
      {"lcm.patch", "4", "patch side in pixels"},
      {"lcm.tap", "1", "stage boundary providing the low-level feature"},
      {"lcm.mode", "patch", "similarity granularity: patch or pixel"},
      {"probe.levels", "0,0.02,0.05,0.1", "ascending noise levels, starting at 0"},
      {"probe.target", "pixels", "pixels or stage1..stage4"},
      {"probe.domain", "source", "dataset domain probed"},
      {"probe.seed", "7", "noise seed"},
      {"cka.samples", "64", "images per domain for CKA"},
      {"curve.variants", "baseline,lem", "variants among baseline, lem, lcm, lem+lcm"},
  };
  return schema;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::set<std::string> known;
  for (const auto& k : config_schema()) known.insert(k.key);

  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!known.contains(key)) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
    if (!out.emplace(key, value).second) fail(ErrorCode::kConfig, "duplicate config key '" + key + "'");
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  for (const auto& k : config_schema()) kv[k.key] = k.default_value;
  for (auto& [k, v] : parse_key_values(text)) kv[k] = v;

  RunConfig c;
  c.domains = parse_list("domains", kv["domains"], false);
  for (const auto& d : c.domains) {
    try {
      find_domain(d);
    } catch (const Error&) {
      bad_value("domains", kv["domains"], "unknown domain '" + d + "'");
    }
  }
  c.shots = parse_int("shots", kv["shots"], 1);
  c.image_size = parse_int("image_size", kv["image_size"], 16);
  if (c.image_size % 4 != 0) bad_value("image_size", kv["image_size"], "must be a multiple of 4");
  c.episodes_per_domain = parse_int("episodes_per_domain", kv["episodes_per_domain"], 1);
  c.seed = parse_number<std::uint64_t>("seed", kv["seed"]);
  if (!kv["data_dir"].empty()) c.data_dir = kv["data_dir"];

  c.run_seed = parse_number<std::uint64_t>("run.seed", kv["run.seed"]);
  c.epochs = parse_int("run.epochs", kv["run.epochs"], 0);
  c.episodes_per_epoch = parse_int("run.episodes_per_epoch", kv["run.episodes_per_epoch"], 1);
  c.eval_episodes = parse_int("run.eval_episodes", kv["run.eval_episodes"], 1);
  c.train.lr = parse_nonneg("run.lr", kv["run.lr"]);
  c.train.momentum = parse_nonneg("run.momentum", kv["run.momentum"]);
  if (c.train.momentum >= 1.0) bad_value("run.momentum", kv["run.momentum"], "must be below 1");
  c.train.temperature = parse_real("run.temperature", kv["run.temperature"]);
  if (c.train.temperature <= 0.0) bad_value("run.temperature", kv["run.temperature"], "must be positive");
  c.run_shots = parse_int("run.shots", kv["run.shots"], 1);
  if (kv["run.out_dir"].empty()) bad_value("run.out_dir", "", "must not be empty");
  c.out_dir = kv["run.out_dir"];
  c.freeze = parse_list("freeze", kv["freeze"], true);
  for (const auto& s : c.freeze) {
    bool ok = false;
    for (int i = 1; i <= kNumStages; ++i) ok = ok || s == "stage" + std::to_string(i);
    if (!ok) bad_value("freeze", kv["freeze"], "unknown stage '" + s + "'");
  }

  c.lem_enabled = parse_bool("lem.enabled", kv["lem.enabled"]);
  c.lem.sigma = parse_nonneg("lem.sigma", kv["lem.sigma"]);
  c.lem.kernel_size = parse_int("lem.kernel_size", kv["lem.kernel_size"], 1);
  if (c.lem.kernel_size % 2 == 0) bad_value("lem.kernel_size", kv["lem.kernel_size"], "must be odd");
  c.lem.tap = parse_int("lem.tap", kv["lem.tap"], 0);
  if (c.lem.tap >= kNumStages) bad_value("lem.tap", kv["lem.tap"], "must precede the final stage");
  c.lem.apply_fourier = parse_bool("lem.fourier", kv["lem.fourier"]);
  c.lem.probability = parse_real("lem.prob", kv["lem.prob"]);
  if (c.lem.probability < 0.0 || c.lem.probability > 1.0) bad_value("lem.prob", kv["lem.prob"], "must lie in [0, 1]");
  c.lem.per_shot = parse_bool("lem.per_shot", kv["lem.per_shot"]);
  c.lem.seed = parse_number<std::uint64_t>("lem.seed", kv["lem.seed"]);

  c.lcm_enabled = parse_bool("lcm.enabled", kv["lcm.enabled"]);
  c.lcm.k = parse_int("lcm.k", kv["lcm.k"], 1);
  c.lcm.w = parse_real("lcm.w", kv["lcm.w"]);
  c.lcm.beta = parse_real("lcm.beta", kv["lcm.beta"]);
  c.lcm.patch_size = parse_int("lcm.patch", kv["lcm.patch"], 1);
  c.lcm.tap = parse_int("lcm.tap", kv["lcm.tap"], 0);
  if (c.lcm.tap >= kNumStages) bad_value("lcm.tap", kv["lcm.tap"], "must precede the final stage");
  if (kv["lcm.mode"] == "patch") {
    c.lcm.mode = SimilarityMode::kPatch;
  } else if (kv["lcm.mode"] == "pixel") {
    c.lcm.mode = SimilarityMode::kPixel;
  } else {
    bad_value("lcm.mode", kv["lcm.mode"], "expected patch or pixel");
  }

  c.probe_levels.clear();
  for (const auto& s : parse_list("probe.levels", kv["probe.levels"], false)) {
    c.probe_levels.push_back(parse_nonneg("probe.levels", s));
  }
  if (c.probe_levels.front() != 0.0) bad_value("probe.levels", kv["probe.levels"], "must start at 0");
  for (std::size_t i = 1; i < c.probe_levels.size(); ++i) {
    if (c.probe_levels[i] <= c.probe_levels[i - 1]) {
      bad_value("probe.levels", kv["probe.levels"], "must be strictly ascending");
    }
  }
  c.probe_target = ProbeTarget::parse(kv["probe.target"]);
  c.probe_domain = kv["probe.domain"];
  c.probe_seed = parse_number<std::uint64_t>("probe.seed", kv["probe.seed"]);
  c.cka_samples = parse_int("cka.samples", kv["cka.samples"], 2);
  c.curve_variants = parse_list("curve.variants", kv["curve.variants"], false);
  for (const auto& v : c.curve_variants) Variant::parse(v);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

std::filesystem::path RunConfig::dataset_root() const { return data_dir ? *data_dir : out_dir / "data"; }

std::string RunConfig::variant() const {
  if (lem_enabled) return lcm_enabled ? "lem+lcm" : "lem";
  return lcm_enabled ? "lcm" : "baseline";
}

std::optional<CalibConfig> RunConfig::calib() const {
  return lcm_enabled ? std::optional(lcm) : std::nullopt;
}

CurveConfig RunConfig::curve() const {
  CurveConfig cc;
  cc.domains = domains;
  cc.variants = curve_variants;
  cc.epochs = epochs;
  cc.episodes_per_epoch = episodes_per_epoch;
  cc.eval_episodes = eval_episodes;
  cc.shots = run_shots;
  cc.image_size = image_size;
  cc.seed = run_seed;
  cc.train = train;
  cc.lem = lem;
  cc.lcm = lcm;
  cc.freeze = freeze;
  return cc;
}

}  // namespace loec::app
