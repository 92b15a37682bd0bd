#include "loec/dataset.hpp"

#include <algorithm>
#include <charconv>

#include "loec/error.hpp"
#include "loec/io.hpp"
#include "loec/netpbm.hpp"

namespace loec {
namespace {

int parse_int_field(const std::string& s, const char* what) {
  int value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::kFormat,
          std::string("manifest field ") + what + " is not an integer: '" + s + "'");
  return value;
}

// Manifest paths must stay inside the dataset root.
std::filesystem::path resolve(const std::filesystem::path& root, const std::string& rel) {
  const std::filesystem::path p(rel);
  require(!rel.empty() && p.is_relative(), ErrorCode::kFormat, "manifest path must be relative: '" + rel + "'");
  for (const auto& part : p) {
    require(part != "..", ErrorCode::kFormat, "manifest path escapes dataset root: '" + rel + "'");
  }
  return root / p;
}

}  // namespace

std::vector<ManifestRow> write_episode(const std::filesystem::path& root, const Episode& episode,
                                       const std::string& episode_id) {
  std::vector<ManifestRow> rows;
  const std::string dir = episode.domain_id;
  for (int k = 0; k < episode.shots(); ++k) {
    ManifestRow row{episode_id, episode.domain_id, episode.class_id, k, "support",
                    dir + "/" + episode_id + "_s" + std::to_string(k) + ".ppm",
                    dir + "/" + episode_id + "_s" + std::to_string(k) + ".pgm"};
    write_ppm(root / row.image_path, episode.support[static_cast<std::size_t>(k)].image);
    write_pgm(root / row.mask_path, episode.support[static_cast<std::size_t>(k)].mask);
    rows.push_back(std::move(row));
  }
  ManifestRow q{episode_id, episode.domain_id, episode.class_id, 0, "query",
                dir + "/" + episode_id + "_q.ppm", dir + "/" + episode_id + "_q.pgm"};
  write_ppm(root / q.image_path, episode.query_image);
  write_pgm(root / q.mask_path, episode.query_mask);
  rows.push_back(std::move(q));
  return rows;
}

Episode read_episode(const std::filesystem::path& root, const std::vector<ManifestRow>& rows) {
  require(!rows.empty(), ErrorCode::kFormat, "episode has no manifest rows");
  Episode ep;
  ep.domain_id = rows.front().domain;
  ep.class_id = rows.front().class_id;
  std::vector<const ManifestRow*> support;
  const ManifestRow* query = nullptr;
  for (const auto& row : rows) {
    require(row.episode_id == rows.front().episode_id && row.domain == ep.domain_id &&
                row.class_id == ep.class_id,
            ErrorCode::kFormat, "inconsistent manifest rows for episode '" + row.episode_id + "'");
    if (row.role == "support") {
      support.push_back(&row);
    } else if (row.role == "query") {
      require(query == nullptr, ErrorCode::kFormat, "episode '" + row.episode_id + "' has two queries");
      query = &row;
    } else {
      fail(ErrorCode::kFormat, "unknown manifest role '" + row.role + "'");
    }
  }
  require(query != nullptr && !support.empty(), ErrorCode::kFormat,
          "episode '" + rows.front().episode_id + "' needs a query and at least one support shot");
  std::sort(support.begin(), support.end(), [](auto* a, auto* b) { return a->shot < b->shot; });
  for (std::size_t k = 0; k < support.size(); ++k) {
    require(support[k]->shot == static_cast<int>(k), ErrorCode::kFormat,
            "episode '" + rows.front().episode_id + "' has non-contiguous shot indices");
    LabeledImage li{read_ppm(resolve(root, support[k]->image_path)),
                    read_pgm(resolve(root, support[k]->mask_path))};
    ep.support.push_back(std::move(li));
  }
  ep.query_image = read_ppm(resolve(root, query->image_path));
  ep.query_mask = read_pgm(resolve(root, query->mask_path));

  auto same_size = [&](const FeatureMap& img, const BinaryMask& m) {
    return img.h() == ep.query_image.h() && img.w() == ep.query_image.w() && m.h == img.h() &&
           m.w == img.w();
  };
  require(same_size(ep.query_image, ep.query_mask), ErrorCode::kFormat, "query image/mask size mismatch");
  for (const auto& s : ep.support) {
    require(same_size(s.image, s.mask), ErrorCode::kFormat, "support image/mask sizes differ from query");
  }
  return ep;
}

void write_episode(const std::filesystem::path& dir, const Episode& episode) {
  write_manifest(dir / "manifest.csv", write_episode(dir, episode, "episode"));
}

Episode read_episode(const std::filesystem::path& dir) {
  return read_episode(dir, read_manifest(dir / "manifest.csv"));
}

void write_manifest(const std::filesystem::path& file, const std::vector<ManifestRow>& rows) {
  std::string text = std::string(kManifestHeader) + "\r\n";
  for (const auto& r : rows) {
    text += csv_row({r.episode_id, r.domain, std::to_string(r.class_id), std::to_string(r.shot),
                     r.role, r.image_path, r.mask_path});
  }
  write_file_atomic(file, text);
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& file) {
  const auto table = parse_csv(read_text_file(file));
  require(!table.empty(), ErrorCode::kFormat, "empty manifest '" + file.string() + "'");
  require(csv_row(table.front()) == std::string(kManifestHeader) + "\r\n", ErrorCode::kFormat,
          "unexpected manifest header in '" + file.string() + "'");
  std::vector<ManifestRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    require(f.size() == 7, ErrorCode::kFormat,
            "manifest line " + std::to_string(i + 1) + " has " + std::to_string(f.size()) + " fields");
    rows.push_back({f[0], f[1], parse_int_field(f[2], "class_id"), parse_int_field(f[3], "shot"),
                    f[4], f[5], f[6]});
  }
  return rows;
}

Dataset load_dataset(const std::filesystem::path& root) {
  const auto rows = read_manifest(root / "manifest.csv");
  Dataset ds;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].episode_id == rows[i].episode_id) ++j;
    std::vector<ManifestRow> group(rows.begin() + static_cast<std::ptrdiff_t>(i),
                                   rows.begin() + static_cast<std::ptrdiff_t>(j));
    ds.by_domain[rows[i].domain].push_back(read_episode(root, group));
    i = j;
  }
  return ds;
}

}  // namespace loec
