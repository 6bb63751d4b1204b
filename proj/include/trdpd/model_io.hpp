#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "trdpd/diffusion.hpp"

namespace trdpd {

/// Binary model layout (all little-endian):
///
///   char[6]  magic "TRDPD\0"
///   u32      format version (1: filters over the zero-mean DCT basis)
///   f64      training peak
///   u32      stages T, filter size m, filters N_k, RBF count M
///   f64      RBF range R, RBF width gamma
///   per stage:
///     f64    beta
///     f64    filter coefficients [N_k][m*m-1]
///     f64    influence weights [N_k][M]
///   u32      CRC-32 of every preceding byte
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> encode_model(const DiffusionModel& model);
DiffusionModel decode_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const DiffusionModel& model);
DiffusionModel load_model(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace trdpd
