#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

#include "config.hpp"

namespace loec::app {

// Each command writes only under cfg.out_dir (gen-data: under the dataset
// root) and logs a short summary to `log`.
void cmd_gen_data(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& log);
void cmd_probe(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& log);
void cmd_cka(const RunConfig& cfg, const std::filesystem::path& checkpoint, std::ostream& log);
void cmd_curve(const RunConfig& cfg, std::ostream& log);

/// Full command-line entry point. Returns the process exit code; errors are
/// reported on `err` prefixed by their E_* name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace loec::app
