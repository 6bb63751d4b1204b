#include "trdpd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace trdpd {
namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Bit-level mapping so results do not depend on the standard library's
  // distribution implementations.
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

Image synthetic_scene(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  Image img(width, height);
  const double base = rng.uniform(40.0, 140.0);
  const double gx = rng.uniform(-60.0, 60.0) / width;
  const double gy = rng.uniform(-60.0, 60.0) / height;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) img(r, c) = base + gx * c + gy * r;

  const int shapes = rng.integer(8, 16);
  const double scale = std::min(width, height);
  for (int s = 0; s < shapes; ++s) {
    const int kind = rng.integer(0, 3);
    const double cy = rng.uniform(0.0, height);
    const double cx = rng.uniform(0.0, width);
    const double ry = rng.uniform(0.05, 0.3) * scale;
    const double rx = rng.uniform(0.05, 0.3) * scale;
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double level = rng.uniform(0.0, 255.0);
    const double shade = rng.uniform(-0.5, 0.5);
    const double period = rng.uniform(3.0, 9.0);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double dy = r - cy, dx = c - cx;
        const double u = (ca * dx + sa * dy) / rx;
        const double v = (-sa * dx + ca * dy) / ry;
        bool inside = false;
        double value = level + shade * (dx + dy);
        switch (kind) {
          case 0: inside = u * u + v * v <= 1.0; break;                  // ellipse
          case 1: inside = std::abs(dx) <= rx && std::abs(dy) <= ry; break;  // rectangle
          case 2:                                                          // striped patch
            inside = std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
            value = level + 40.0 * std::sin(2.0 * std::numbers::pi * (ca * dx + sa * dy) / period);
            break;
          default: inside = std::abs(u) + std::abs(v) <= 1.0; break;  // diamond
        }
        if (inside) img(r, c) = value;
      }
    }
  }

  Image out(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) acc += img(reflect_index(r + dr, height), reflect_index(c + dc, width));
      out(r, c) = std::clamp(acc / 9.0, 0.0, 255.0);
    }
  }
  return out;
}

Image crop(const Image& image, int row, int col, int width, int height) {
  if (row < 0 || col < 0 || row + height > image.height() || col + width > image.width()) {
    throw std::out_of_range("crop window outside the image");
  }
  Image out(width, height);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) out(r, c) = image(row + r, col + c);
  return out;
}

}  // namespace trdpd
