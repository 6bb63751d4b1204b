#pragma once

#include <span>
#include <vector>

namespace trdpd {

/// Equidistant Gaussian RBF grid shared by every influence function of a
/// model: `count` centers on [-range, range] with common width `width`.
struct RbfGrid {
  int count = 63;
  double range = 310.0;
  double width = 10.0;

  /// Default grid for data in [0, peak]: range 310*peak/255 and width equal
  /// to the center spacing.
  static RbfGrid for_peak(double peak, int count = 63);

  std::vector<double> centers() const;
  double spacing() const;
  void validate() const;
};

/// phi(z) = sum_j w_j * exp(-(z - mu_j)^2 / (2 gamma^2)).
class InfluenceFunction {
 public:
  InfluenceFunction() = default;
  InfluenceFunction(std::vector<double> weights, std::vector<double> centers, double width);
  InfluenceFunction(const RbfGrid& grid, std::vector<double> weights);

  double operator()(double z) const { return phi(z); }
  double phi(double z) const;
  double phi_prime(double z) const;

  /// Values exp(-(z - mu_j)^2 / (2 gamma^2)) for every center; phi is the
  /// dot product of these with the weights.
  std::vector<double> weight_basis(double z) const;
  void weight_basis(double z, std::span<double> out) const;

  /// phi and phi' from a precomputed basis vector.
  double phi_from_basis(std::span<const double> basis) const;
  double phi_prime_from_basis(double z, std::span<const double> basis) const;

  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }
  std::span<const double> centers() const { return centers_; }
  double width() const { return width_; }

 private:
  std::vector<double> weights_;
  std::vector<double> centers_;
  double width_ = 1.0;
};

/// Least-squares RBF weights on `grid` reproducing phi(z) = slope * z at
/// the grid centers.
std::vector<double> fit_linear_weights(const RbfGrid& grid, double slope);

}  // namespace trdpd
