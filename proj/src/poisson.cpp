#include "trdpd/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trdpd/parallel.hpp"

namespace trdpd {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Below this mean the sequential search is cheap; above it PTRS is used.
constexpr double kInversionLimit = 10.0;

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

UniformStream::UniformStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0, 0} {}

double UniformStream::next() {
  if (used_ >= 4) {
    buffer_ = Philox4x32::block(counter_, key_);
    if (++counter_[2] == 0) ++counter_[3];
    used_ = 0;
  }
  const std::uint32_t a = buffer_[used_] >> 5;
  const std::uint32_t b = buffer_[used_ + 1] >> 6;
  used_ += 2;
  // 53 random bits, shifted by half an ulp so that 0 is never returned.
  return (a * 67108864.0 + b + 0.5) / 9007199254740992.0;
}

std::uint64_t poisson_variate(double mean, UniformStream& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("Poisson mean must be non-negative");
  if (mean == 0.0) return 0;
  if (mean < kInversionLimit) {
    const double u = rng.next();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= mean / static_cast<double>(k);
      const double next = cdf + p;
      if (next == cdf) break;  // the remaining tail is below double resolution
      cdf = next;
    }
    return k;
  }

  // Hormann's transformed rejection with squeeze (PTRS).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.next() - 0.5;
    const double v = rng.next();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::uint64_t>(k);
    }
  }
}

Image scale_to_peak(const Image& clean, double peak) {
  if (!(peak > 0.0) || !std::isfinite(peak)) throw std::invalid_argument("peak must be positive");
  if (clean.empty()) throw std::invalid_argument("scale_to_peak: empty image");
  const double max_value = *std::max_element(clean.pixels().begin(), clean.pixels().end());
  if (!(max_value > 0.0)) throw std::invalid_argument("scale_to_peak: image has no positive pixel");
  Image out(clean.width(), clean.height());
  const double scale = peak / max_value;
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = clean[p] * scale;
  // Pin the maximum exactly: x * (peak / x) need not round to peak.
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (clean[p] == max_value) out[p] = peak;
  }
  return out;
}

Image sample_poisson(const Image& u, std::uint64_t seed) {
  for (double v : u.pixels()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("sample_poisson: means must be finite and non-negative");
  }
  Image f(u.width(), u.height());
  const auto rows = static_cast<std::size_t>(u.height());
  parallel_for(rows, [&](std::size_t r) {
    for (int c = 0; c < u.width(); ++c) {
      const std::size_t p = r * static_cast<std::size_t>(u.width()) + c;
      UniformStream rng(seed, p);
      f[p] = static_cast<double>(poisson_variate(u[p], rng));
    }
  });
  return f;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

}  // namespace trdpd
