#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "obsdn/model.hpp"

namespace obsdn {

// Binary layout, all integers and floats little-endian:
//   "OBSD" | u32 version | u32 depth, width, kernel, channels_in, channels_out
//   | u8 residual | u32 layer count
//   | per layer: u32 rank, u32 dims[rank], f64 kernel[...], u32 rank, u32 dims[rank], f64 bias[...]
//   | u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params);
ModelParams deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Whole-file helpers shared by the persistence code.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace obsdn
