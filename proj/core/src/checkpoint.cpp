#include "loec/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "loec/error.hpp"
#include "loec/io.hpp"

namespace loec {
namespace {

constexpr char kMagic[4] = {'L', 'O', 'E', 'C'};
constexpr std::uint32_t kMaxNameLength = 256;
constexpr std::uint32_t kMaxRank = 8;

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto b : bytes) h = (h ^ b) * 1099511628211ULL;
  return h;
}

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void bytes(std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32(const std::string& context) {
    need(4, context);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const std::string& context) {
    need(8, context);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str(std::size_t n, const std::string& context) {
    need(n, context);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n, const std::string& context) const {
    if (remaining() < n) fail(ErrorCode::kFormat, "checkpoint truncated while reading " + context);
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double>* data;
};

std::vector<NamedTensor> tensor_table(EncoderState& enc) {
  std::vector<NamedTensor> t;
  for (auto& s : enc.stages) {
    const auto& sh = s.conv.weights.shape();
    t.push_back({s.name + ".weight",
                 {static_cast<std::uint32_t>(sh.n), static_cast<std::uint32_t>(sh.c),
                  static_cast<std::uint32_t>(sh.h), static_cast<std::uint32_t>(sh.w)},
                 &s.conv.weights.storage()});
    t.push_back({s.name + ".bias", {static_cast<std::uint32_t>(s.bias.size())}, &s.bias});
  }
  return t;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const EncoderState& enc) {
  EncoderState copy = enc;
  const auto table = tensor_table(copy);
  Writer w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kCheckpointVersion);
  const std::size_t payload_start = w.out.size();
  w.u32(static_cast<std::uint32_t>(table.size()));
  for (const auto& t : table) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(d);
    for (double v : *t.data) w.f32(v);
  }
  const auto checksum = fnv1a(std::span(w.out).subspan(payload_start));
  w.u64(checksum);
  return std::move(w.out);
}

EncoderState decode_checkpoint(std::span<const std::uint8_t> bytes, int tap_index) {
  Reader r(bytes);
  const std::string magic = r.str(4, "magic");
  require(std::memcmp(magic.data(), kMagic, 4) == 0, ErrorCode::kFormat, "bad checkpoint magic");
  const std::uint32_t version = r.u32("version");
  require(version == kCheckpointVersion, ErrorCode::kFormat,
          "unsupported checkpoint version " + std::to_string(version));
  const std::size_t payload_start = r.pos();

  EncoderState enc = make_encoder(0, tap_index);
  auto table = tensor_table(enc);
  const std::uint32_t count = r.u32("tensor count");
  require(count == table.size(), ErrorCode::kFormat,
          "checkpoint holds " + std::to_string(count) + " tensors, expected " + std::to_string(table.size()));

  for (auto& expected : table) {
    const std::uint32_t name_len = r.u32("name length of tensor '" + expected.name + "'");
    require(name_len <= kMaxNameLength, ErrorCode::kFormat,
            "implausible name length where tensor '" + expected.name + "' was expected");
    const std::string name = r.str(name_len, "name of tensor '" + expected.name + "'");
    require(name == expected.name, ErrorCode::kFormat,
            "expected tensor '" + expected.name + "', found '" + name + "'");
    const std::uint32_t rank = r.u32("rank of tensor '" + name + "'");
    require(rank <= kMaxRank && rank == expected.dims.size(), ErrorCode::kFormat,
            "tensor '" + name + "' has rank " + std::to_string(rank));
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = r.u32("dims of tensor '" + name + "'");
      require(d == expected.dims[i], ErrorCode::kFormat, "tensor '" + name + "' has unexpected dimensions");
    }
    auto& data = *expected.data;
    r.need(data.size() * 4, "data of tensor '" + name + "'");
    for (double& v : data) {
      const float f = std::bit_cast<float>(r.u32(name));
      if (!std::isfinite(f)) fail(ErrorCode::kFormat, "tensor '" + name + "' holds a non-finite value");
      v = f;
    }
  }
  const std::size_t payload_end = r.pos();
  const std::uint64_t stored = r.u64("checksum");
  require(r.remaining() == 0, ErrorCode::kFormat, "trailing bytes after checkpoint checksum");
  require(stored == fnv1a(bytes.subspan(payload_start, payload_end - payload_start)), ErrorCode::kFormat,
          "checkpoint checksum mismatch");
  return enc;
}

void save_checkpoint(const EncoderState& enc, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(enc));
}

EncoderState load_checkpoint(const std::filesystem::path& path, int tap_index) {
  return decode_checkpoint(read_file(path), tap_index);
}

}  // namespace loec
