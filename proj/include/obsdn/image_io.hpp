#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "obsdn/tensor.hpp"

namespace obsdn {

// Binary netpbm, maxval 255 only. P5 decodes to 1×H×W, P6 to 3×H×W (planar).
// Bytes map to b/255; encoding maps v to round(clamp(v, 0, 1) * 255).
Tensor decode_netpbm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_netpbm(const Tensor& image);

Tensor read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Tensor& image);

}  // namespace obsdn
