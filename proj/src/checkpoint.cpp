#include "obsdn/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "obsdn/error.hpp"

namespace obsdn {
namespace {

constexpr std::uint8_t kMagic[4] = {'O', 'B', 'S', 'D'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) f64(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  std::span<const std::uint8_t> view() const { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  Tensor tensor(const char* what) {
    const auto rank = u32();
    if (rank == 0 || rank > 4) throw FormatError(std::string("checkpoint: bad rank for ") + what);
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = u32();
      if (d == 0) throw FormatError(std::string("checkpoint: zero dimension in ") + what);
      n *= d;
    }
    if (n > remaining() / 8) throw FormatError(std::string("checkpoint: ") + what + " overruns file");
    std::vector<double> data(n);
    for (auto& v : data) v = f64();
    return Tensor(std::move(shape), std::move(data));
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw FormatError("checkpoint: unexpected end of payload");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string printable_magic(std::span<const std::uint8_t> bytes) {
  std::string s;
  for (std::size_t i = 0; i < 4 && i < bytes.size(); ++i) {
    const auto c = bytes[i];
    if (std::isprint(c)) {
      s += static_cast<char>(c);
    } else {
      static const char* hex = "0123456789abcdef";
      s += "\\x";
      s += hex[c >> 4];
      s += hex[c & 15];
    }
  }
  return s;
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    c = ::crc32(c, bytes.data() + off, chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params) {
  params.validate();
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  const auto& a = params.arch;
  w.u32(a.depth);
  w.u32(a.width);
  w.u32(a.kernel);
  w.u32(a.channels_in);
  w.u32(a.channels_out);
  w.u8(a.residual ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    w.tensor(l.kernel);
    w.tensor(l.bias);
  }
  w.u32(crc32(w.view()));
  return w.take();
}

ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic \"" + printable_magic(bytes) + "\", expected \"OBSD\"");
  if (bytes.size() >= 8) {
    Reader hdr(bytes.subspan(4, 4));
    const auto version = hdr.u32();
    if (version != kCheckpointVersion)
      throw VersionError("checkpoint: version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < 12) throw ChecksumError("checkpoint: file truncated to " + std::to_string(bytes.size()) + " bytes");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  const auto stored = tail.u32();
  const auto actual = crc32(body);
  if (stored != actual) throw ChecksumError("checkpoint: CRC-32 mismatch (file truncated or corrupted)");

  Reader r(body.subspan(8));
  ModelParams p;
  p.arch.depth = r.u32();
  p.arch.width = r.u32();
  p.arch.kernel = r.u32();
  p.arch.channels_in = r.u32();
  p.arch.channels_out = r.u32();
  p.arch.residual = r.u8() != 0;
  const auto n_layers = r.u32();
  if (n_layers != p.arch.depth) throw FormatError("checkpoint: layer count disagrees with depth");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    auto kernel = r.tensor("kernel");
    auto bias = r.tensor("bias");
    p.layers.push_back(ConvLayer{std::move(kernel), std::move(bias)});
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after last layer");
  try {
    p.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace obsdn
