#pragma once

#include <filesystem>

#include "trdpd/image.hpp"

namespace trdpd {

/// Reads a binary (P5) or ASCII (P2) PGM with maxval <= 255.
Image read_pgm(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM. Values are clamped to [0,255] and rounded
/// half-up.
void write_pgm(const std::filesystem::path& path, const Image& image);

/// Reads a PNG as 8-bit grayscale (color inputs are converted by libpng).
/// Throws if the build has no PNG support.
Image read_png(const std::filesystem::path& path);

bool png_supported();

/// Dispatches on the file extension (.pgm, .png).
Image read_image(const std::filesystem::path& path);

}  // namespace trdpd
