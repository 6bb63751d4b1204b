#include "trdpd/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "trdpd/poisson.hpp"

namespace trdpd {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> g(kWindow);
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

bool same_peak(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

double psnr(const Image& estimate, const Image& reference, double peak) {
  if (!estimate.same_shape(reference)) throw std::invalid_argument("psnr: shape mismatch");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const double scale = 255.0 / peak;
  double acc = 0.0;
  for (std::size_t p = 0; p < estimate.size(); ++p) {
    const double d = (estimate[p] - reference[p]) * scale;
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(estimate.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image& estimate, const Image& reference, double range) {
  if (!estimate.same_shape(reference)) throw std::invalid_argument("ssim: shape mismatch");
  if (estimate.width() < kWindow || estimate.height() < kWindow) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  }
  const std::vector<double> g = gaussian_window();
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const int w = estimate.width();
  const int h = estimate.height();
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;

  // Horizontal pass on the five moment maps, then vertical pass per window.
  enum { kX, kY, kXX, kYY, kXY, kMaps };
  std::vector<std::vector<double>> horiz(kMaps, std::vector<double>(static_cast<std::size_t>(h) * ow));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      double m[kMaps] = {};
      for (int j = 0; j < kWindow; ++j) {
        const double x = estimate(r, c + j);
        const double y = reference(r, c + j);
        m[kX] += g[j] * x;
        m[kY] += g[j] * y;
        m[kXX] += g[j] * (x * x);
        m[kYY] += g[j] * (y * y);
        m[kXY] += g[j] * (x * y);
      }
      for (int k = 0; k < kMaps; ++k) horiz[k][static_cast<std::size_t>(r) * ow + c] = m[k];
    }
  }

  double total = 0.0;
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double m[kMaps] = {};
      for (int i = 0; i < kWindow; ++i) {
        const std::size_t idx = static_cast<std::size_t>(r + i) * ow + c;
        for (int k = 0; k < kMaps; ++k) m[k] += g[i] * horiz[k][idx];
      }
      const double mx = m[kX], my = m[kY];
      const double vx = m[kXX] - mx * mx;
      const double vy = m[kYY] - my * my;
      const double cov = m[kXY] - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / (static_cast<double>(ow) * oh);
}

const EvalRow& EvalReport::mean_for(double peak) const {
  for (const auto& row : rows) {
    if (row.aggregate && same_peak(row.peak, peak)) return row;
  }
  throw std::out_of_range("no aggregate row for the requested peak");
}

EvalReport evaluate_with(const Denoiser& denoiser, const std::vector<NamedImage>& images,
                         const std::vector<double>& peaks, std::uint64_t seed) {
  EvalReport report;
  for (double peak : peaks) {
    double psnr_sum = 0.0;
    double ssim_sum = 0.0;
    for (std::size_t n = 0; n < images.size(); ++n) {
      EvalCase item;
      item.source = &images[n];
      item.peak = peak;
      item.clean = scale_to_peak(images[n].image, peak);
      item.noisy = sample_poisson(item.clean, derive_seed(seed, n));
      const Image estimate = denoiser(item);

      EvalRow row;
      row.peak = peak;
      row.image_id = images[n].id;
      row.psnr_db = psnr(estimate, item.clean, peak);
      Image est255 = estimate;
      Image ref255 = item.clean;
      for (std::size_t p = 0; p < est255.size(); ++p) {
        est255[p] *= 255.0 / peak;
        ref255[p] *= 255.0 / peak;
      }
      row.ssim = ssim(est255, ref255);
      psnr_sum += row.psnr_db;
      ssim_sum += row.ssim;
      report.rows.push_back(row);
    }
    EvalRow mean;
    mean.peak = peak;
    mean.image_id = kAggregateId;
    mean.aggregate = true;
    const auto count = static_cast<double>(images.size());
    mean.psnr_db = images.empty() ? 0.0 : psnr_sum / count;
    mean.ssim = images.empty() ? 0.0 : ssim_sum / count;
    report.rows.push_back(mean);
  }
  return report;
}

EvalReport evaluate_set(const std::vector<DiffusionModel>& models, const std::vector<NamedImage>& images,
                        const std::vector<double>& peaks, std::uint64_t seed) {
  std::map<double, const DiffusionModel*> by_peak;
  for (double peak : peaks) {
    const DiffusionModel* found = nullptr;
    for (const auto& m : models) {
      if (same_peak(m.training_peak(), peak)) found = &m;
    }
    if (found == nullptr) {
      std::ostringstream msg;
      msg << "no model trained for peak " << peak;
      throw std::invalid_argument(msg.str());
    }
    by_peak[peak] = found;
  }
  return evaluate_with([&](const EvalCase& c) { return forward(c.noisy, *by_peak.at(c.peak)); }, images, peaks,
                       seed);
}

void write_csv(std::ostream& out, const EvalReport& report) {
  out << "peak,image_id,psnr_db,ssim\n";
  auto number = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
  };
  for (const auto& row : report.rows) {
    out << number(row.peak) << ',' << row.image_id << ',' << number(row.psnr_db) << ',' << number(row.ssim) << '\n';
  }
}

}  // namespace trdpd
