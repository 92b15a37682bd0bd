#include "loec/netpbm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "loec/error.hpp"
#include "loec/io.hpp"

namespace loec {
namespace {

constexpr int kMaxDimension = 1 << 15;

struct Header {
  int width = 0;
  int height = 0;
  std::size_t payload_offset = 0;
};

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void expect_magic(char kind) {
    require(bytes_.size() >= 2 && bytes_[0] == 'P' && bytes_[1] == kind, ErrorCode::kFormat,
            std::string("expected NetPBM magic P") + kind);
    pos_ = 2;
  }

  int read_int(const char* what) {
    skip_space_and_comments();
    require(pos_ < bytes_.size() && std::isdigit(bytes_[pos_]), ErrorCode::kFormat,
            std::string("missing ") + what + " in NetPBM header");
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      require(value <= kMaxDimension, ErrorCode::kFormat, std::string(what) + " out of range");
      ++pos_;
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t end_of_header() {
    require(pos_ < bytes_.size() && std::isspace(bytes_[pos_]), ErrorCode::kFormat,
            "NetPBM header not terminated by whitespace");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

Header parse_header(std::span<const std::uint8_t> bytes, char kind, std::size_t channels) {
  HeaderReader reader(bytes);
  reader.expect_magic(kind);
  Header h;
  h.width = reader.read_int("width");
  h.height = reader.read_int("height");
  const int maxval = reader.read_int("maxval");
  require(h.width >= 1 && h.height >= 1, ErrorCode::kFormat, "NetPBM dimensions must be positive");
  require(maxval == 255, ErrorCode::kFormat, "NetPBM maxval must be 255, got " + std::to_string(maxval));
  h.payload_offset = reader.end_of_header();
  const std::size_t expected = static_cast<std::size_t>(h.width) * h.height * channels;
  const std::size_t available = bytes.size() - h.payload_offset;
  require(available >= expected, ErrorCode::kFormat,
          "truncated NetPBM payload: expected " + std::to_string(expected) + " bytes, found " +
              std::to_string(available));
  require(available == expected, ErrorCode::kFormat,
          "trailing bytes after NetPBM payload (" + std::to_string(available - expected) + ")");
  return h;
}

std::vector<std::uint8_t> with_header(char kind, int w, int h, std::size_t payload) {
  const std::string header = std::string("P") + kind + "\n" + std::to_string(w) + " " +
                             std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + payload);
  return out;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

std::vector<std::uint8_t> encode_ppm(const FeatureMap& image) {
  require(image.n() == 1 && image.c() == 3, ErrorCode::kShape, "PPM images must be (1, 3, H, W)");
  auto out = with_header('6', image.w(), image.h(), image.shape().numel());
  for (int y = 0; y < image.h(); ++y) {
    for (int x = 0; x < image.w(); ++x) {
      for (int c = 0; c < 3; ++c) out.push_back(quantize(image.at(0, c, y, x)));
    }
  }
  return out;
}

FeatureMap decode_ppm(std::span<const std::uint8_t> bytes) {
  const Header h = parse_header(bytes, '6', 3);
  FeatureMap image(Shape{1, 3, h.height, h.width});
  const std::uint8_t* p = bytes.data() + h.payload_offset;
  for (int y = 0; y < h.height; ++y) {
    for (int x = 0; x < h.width; ++x) {
      for (int c = 0; c < 3; ++c) image.at(0, c, y, x) = *p++ / 255.0;
    }
  }
  return image;
}

std::vector<std::uint8_t> encode_pgm(const BinaryMask& mask) {
  auto out = with_header('5', mask.w, mask.h, mask.size());
  for (auto v : mask.values) out.push_back(v ? 255 : 0);
  return out;
}

BinaryMask decode_pgm(std::span<const std::uint8_t> bytes) {
  const Header h = parse_header(bytes, '5', 1);
  BinaryMask mask(h.height, h.width);
  const std::uint8_t* p = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (p[i] != 0 && p[i] != 255) {
      fail(ErrorCode::kFormat, "mask byte " + std::to_string(p[i]) + " at offset " +
                                   std::to_string(i) + " is neither 0 nor 255");
    }
    mask.values[i] = p[i] ? 1 : 0;
  }
  return mask;
}

void write_ppm(const std::filesystem::path& path, const FeatureMap& image) {
  write_file_atomic(path, encode_ppm(image));
}

FeatureMap read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }

void write_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  write_file_atomic(path, encode_pgm(mask));
}

BinaryMask read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

}  // namespace loec
