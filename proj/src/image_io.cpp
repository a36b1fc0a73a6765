#include "obsdn/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "obsdn/checkpoint.hpp"
#include "obsdn/error.hpp"

namespace obsdn {
namespace {

class HeaderParser {
 public:
  explicit HeaderParser(std::span<const std::uint8_t> b) : b_(b) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* field) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1'000'000'000UL) throw MalformedHeaderError(std::string("netpbm: ") + field + " is too large");
      ++pos_;
    }
    if (pos_ == start) throw MalformedHeaderError(std::string("netpbm: missing or non-numeric ") + field);
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_space() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_]))
      throw MalformedHeaderError("netpbm: expected whitespace after maxval");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor decode_netpbm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw MalformedHeaderError("netpbm: missing 'P' magic");
  std::size_t channels = 0;
  if (bytes[1] == '5')
    channels = 1;
  else if (bytes[1] == '6')
    channels = 3;
  else if (bytes[1] >= '1' && bytes[1] <= '7')
    throw UnsupportedFormatError(std::string("netpbm: P") + static_cast<char>(bytes[1]) +
                                 " is not supported (binary P5/P6 only)");
  else
    throw MalformedHeaderError("netpbm: unknown magic");

  HeaderParser hp(bytes);
  hp.advance(2);
  const auto width = hp.number("width");
  const auto height = hp.number("height");
  const auto maxval = hp.number("maxval");
  if (width == 0 || height == 0) throw MalformedHeaderError("netpbm: zero image dimension");
  if (maxval != 255)
    throw UnsupportedFormatError("netpbm: maxval " + std::to_string(maxval) + " is not supported (expected 255)");
  hp.single_space();

  const std::size_t plane = width * height;
  const std::size_t need = plane * channels;
  const std::size_t have = bytes.size() - hp.pos();
  if (have < need)
    throw ShortDataError("netpbm: raster has " + std::to_string(have) + " bytes, expected " + std::to_string(need));

  Tensor img(Shape{channels, height, width});
  const std::uint8_t* raster = bytes.data() + hp.pos();
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < channels; ++c) img[c * plane + i] = raster[i * channels + c] / 255.0;
  return img;
}

std::vector<std::uint8_t> encode_netpbm(const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3))
    throw ShapeError("netpbm: image must be 1xHxW or 3xHxW, got " + shape_str(image.shape()));
  const std::size_t channels = image.dim(0);
  const std::size_t height = image.dim(1);
  const std::size_t width = image.dim(2);
  const std::string header =
      (channels == 1 ? "P5\n" : "P6\n") + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::size_t plane = width * height;
  out.reserve(out.size() + plane * channels);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = std::clamp(image[c * plane + i], 0.0, 1.0);
      out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
  return out;
}

Tensor read_image(const std::filesystem::path& path) {
  try {
    return decode_netpbm(read_file(path));
  } catch (const FormatError& e) {
    // Re-throw the same type with the file name attached.
    const std::string msg = path.string() + ": " + e.what();
    if (dynamic_cast<const UnsupportedFormatError*>(&e)) throw UnsupportedFormatError(msg);
    if (dynamic_cast<const ShortDataError*>(&e)) throw ShortDataError(msg);
    throw MalformedHeaderError(msg);
  }
}

void write_image(const std::filesystem::path& path, const Tensor& image) { write_file(path, encode_netpbm(image)); }

}  // namespace obsdn
