#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "loec/episode.hpp"

namespace loec {

inline constexpr const char* kManifestHeader =
    "episode_id,domain,class_id,shot,role,image_path,mask_path";

/// One manifest line. Paths are relative to the dataset root.
struct ManifestRow {
  std::string episode_id;
  std::string domain;
  int class_id = 0;
  int shot = 0;
  std::string role;  // "support" or "query"
  std::string image_path;
  std::string mask_path;
};

/// Writes the episode's images under root/<domain>/ and returns its manifest
/// rows (support shots first, then the query).
std::vector<ManifestRow> write_episode(const std::filesystem::path& root, const Episode& episode,
                                       const std::string& episode_id);
/// Rebuilds an episode from its manifest rows. E_FORMAT on inconsistent rows.
Episode read_episode(const std::filesystem::path& root, const std::vector<ManifestRow>& rows);

/// Single-episode directory: images plus its own manifest.csv.
void write_episode(const std::filesystem::path& dir, const Episode& episode);
Episode read_episode(const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& file, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& file);

/// All episodes of a dataset root, grouped by domain in manifest order.
struct Dataset {
  std::map<std::string, std::vector<Episode>> by_domain;
};

Dataset load_dataset(const std::filesystem::path& root);

}  // namespace loec
