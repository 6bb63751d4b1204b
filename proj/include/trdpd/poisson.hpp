#pragma once

#include <array>
#include <cstdint>

#include "trdpd/image.hpp"

namespace trdpd {

struct NoiseSpec {
  double peak = 1.0;
  std::uint64_t seed = 0;
};

/// Philox4x32-10 counter-based generator. Each (key, counter) pair maps to
/// four independent 32-bit words, so any stream can be addressed directly.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key);
};

/// Sequential uniform doubles in (0, 1) from the Philox stream identified
/// by (seed, stream index).
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t stream);
  double next();

 private:
  Philox4x32::Key key_;
  Philox4x32::Counter counter_;
  Philox4x32::Counter buffer_{};
  int used_ = 4;
};

/// Exact Poisson variate: sequential-search inversion for mean < 10,
/// transformed rejection (PTRS) above.
std::uint64_t poisson_variate(double mean, UniformStream& rng);

/// Rescales so that the maximum becomes `peak`.
Image scale_to_peak(const Image& clean, double peak);

/// Draws f_p ~ Poisson(u_p) independently per pixel; pixel p uses stream p
/// of `seed`, so the result does not depend on traversal order.
Image sample_poisson(const Image& u, std::uint64_t seed);

/// Mixes a base seed with an index (e.g. image number) into a new seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace trdpd
