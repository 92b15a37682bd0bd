#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loec/analysis.hpp"

namespace loec::app {

/// Raw `key = value` pairs in file order. `#` starts a comment.
/// E_CONFIG on malformed lines, duplicate keys or keys outside the schema.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Every accepted key with its default and a one-line description.
struct KeyDoc {
  const char* key;
  const char* default_value;
  const char* help;
};
const std::vector<KeyDoc>& config_schema();

struct RunConfig {
  // Data generation.
  std::vector<std::string> domains{"source", "shift1", "shift2", "shift3", "shift4"};
  int shots = 1;
  int image_size = 32;
  int episodes_per_domain = 40;
  std::uint64_t seed = 42;
  std::optional<std::filesystem::path> data_dir;

  // Training and evaluation.
  std::uint64_t run_seed = 42;
  int epochs = 10;
  int episodes_per_epoch = 100;
  int eval_episodes = 40;
  int run_shots = 1;
  std::filesystem::path out_dir = "out";
  TrainConfig train;
  std::vector<std::string> freeze;

  bool lem_enabled = false;
  LemConfig lem;
  bool lcm_enabled = false;
  CalibConfig lcm;

  std::vector<double> probe_levels{0.0, 0.02, 0.05, 0.1};
  ProbeTarget probe_target;
  std::string probe_domain = "source";
  std::uint64_t probe_seed = 7;
  int cka_samples = 64;
  std::vector<std::string> curve_variants{"baseline", "lem"};

  /// Where gen-data writes and train/eval/probe read the dataset.
  std::filesystem::path dataset_root() const;
  /// "baseline", "lem", "lcm" or "lem+lcm" from the enabled flags.
  std::string variant() const;
  std::optional<CalibConfig> calib() const;
  CurveConfig curve() const;
};

/// Builds a validated RunConfig. Every key is checked before any is applied.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace loec::app
