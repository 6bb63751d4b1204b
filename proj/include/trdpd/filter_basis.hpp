#pragma once

#include <span>
#include <vector>

#include "trdpd/image.hpp"

namespace trdpd {

/// Orthonormal 2D DCT-II atoms of size m x m with the constant atom removed.
/// Every filter built from it has zero mean. Atoms are ordered row-major in
/// (vertical frequency, horizontal frequency), skipping (0, 0).
class FilterBasis {
 public:
  explicit FilterBasis(int size);

  int kernel_size() const { return size_; }
  std::size_t count() const { return atoms_.size(); }
  const Kernel& atom(std::size_t i) const { return atoms_[i]; }

  Kernel synthesize(std::span<const double> coeffs) const;
  /// Coefficients of the projection of `k` onto the atoms; for a gradient
  /// with respect to kernel entries this yields the gradient with respect to
  /// the coefficients.
  std::vector<double> project(const Kernel& k) const;

 private:
  int size_;
  std::vector<Kernel> atoms_;
};

}  // namespace trdpd
