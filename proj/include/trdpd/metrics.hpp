#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "trdpd/diffusion.hpp"
#include "trdpd/image.hpp"

namespace trdpd {

/// PSNR in dB after mapping both images from [0, peak] onto [0, 255].
/// Identical images give +infinity.
double psnr(const Image& estimate, const Image& reference, double peak = 255.0);

/// Mean SSIM over all fully contained 11x11 Gaussian (sigma 1.5) windows,
/// K1 = 0.01, K2 = 0.03, dynamic range `range` (255 for 8-bit data).
double ssim(const Image& estimate, const Image& reference, double range = 255.0);

struct NamedImage {
  std::string id;
  Image image;  // clean, [0, 255]
};

struct EvalCase {
  const NamedImage* source = nullptr;
  double peak = 0.0;
  Image clean;  // scaled to peak
  Image noisy;  // Poisson counts
};

using Denoiser = std::function<Image(const EvalCase&)>;

struct EvalRow {
  double peak = 0.0;
  std::string image_id;
  double psnr_db = 0.0;
  double ssim = 0.0;
  bool aggregate = false;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  /// Aggregate row of a peak; throws if absent.
  const EvalRow& mean_for(double peak) const;
};

inline constexpr const char* kAggregateId = "<mean>";

/// For every peak and image: scale to peak, add Poisson noise (seeded per
/// image), denoise, and score on the 255 scale. Each peak ends with an
/// aggregate row holding the arithmetic means.
EvalReport evaluate_with(const Denoiser& denoiser, const std::vector<NamedImage>& images,
                         const std::vector<double>& peaks, std::uint64_t seed);

/// Picks the model whose training peak matches each requested peak.
EvalReport evaluate_set(const std::vector<DiffusionModel>& models, const std::vector<NamedImage>& images,
                        const std::vector<double>& peaks, std::uint64_t seed);

/// Columns: peak,image_id,psnr_db,ssim. Aggregate rows use image_id "<mean>".
void write_csv(std::ostream& out, const EvalReport& report);

}  // namespace trdpd
