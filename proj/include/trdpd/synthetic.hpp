#pragma once

#include <cstdint>

#include "trdpd/image.hpp"

namespace trdpd {

/// Deterministic piecewise-smooth test scene in [0, 255]: a shaded
/// background with overlapping discs, ellipses, rectangles and striped
/// patches, lightly blurred. Stands in for natural images where no dataset
/// is available (tests, gradcheck, benchmarks).
Image synthetic_scene(int width, int height, std::uint64_t seed);

/// Crop of size width x height with its top-left corner at (row, col).
Image crop(const Image& image, int row, int col, int width, int height);

}  // namespace trdpd
