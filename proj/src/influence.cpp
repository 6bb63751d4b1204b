#include "trdpd/influence.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trdpd {

RbfGrid RbfGrid::for_peak(double peak, int count) {
  if (!(peak > 0.0)) throw std::invalid_argument("RbfGrid::for_peak: peak must be positive");
  RbfGrid grid;
  grid.count = count;
  grid.range = 310.0 * peak / 255.0;
  grid.width = grid.spacing();
  if (count == 1) grid.width = grid.range > 0.0 ? grid.range : 1.0;
  return grid;
}

double RbfGrid::spacing() const { return count > 1 ? 2.0 * range / (count - 1) : 0.0; }

std::vector<double> RbfGrid::centers() const {
  std::vector<double> mu(static_cast<std::size_t>(std::max(count, 0)));
  if (count == 1) {
    mu[0] = 0.0;
    return mu;
  }
  const double step = spacing();
  for (int j = 0; j < count; ++j) mu[j] = -range + j * step;
  return mu;
}

void RbfGrid::validate() const {
  if (count < 1) throw std::invalid_argument("RBF grid needs at least one center");
  if (count > 1 && !(range > 0.0)) throw std::invalid_argument("RBF grid range must be positive");
  if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("RBF width must be positive");
}

InfluenceFunction::InfluenceFunction(std::vector<double> weights, std::vector<double> centers,
                                     double width)
    : weights_(std::move(weights)), centers_(std::move(centers)), width_(width) {
  if (centers_.empty()) throw std::invalid_argument("influence function needs at least one center");
  if (weights_.size() != centers_.size()) {
    throw std::invalid_argument("influence function: weight and center counts differ");
  }
  if (!(width_ > 0.0) || !std::isfinite(width_)) {
    throw std::invalid_argument("influence function width must be positive");
  }
  if (centers_.size() > 1) {
    const double step = centers_[1] - centers_[0];
    if (!(step > 0.0)) throw std::invalid_argument("influence centers must be increasing");
    for (std::size_t j = 1; j < centers_.size(); ++j) {
      const double expected = centers_[0] + static_cast<double>(j) * step;
      if (std::abs(centers_[j] - expected) > 1e-12 * std::max(1.0, std::abs(expected))) {
        throw std::invalid_argument("influence centers must be equidistant");
      }
    }
  }
}

InfluenceFunction::InfluenceFunction(const RbfGrid& grid, std::vector<double> weights)
    : InfluenceFunction(std::move(weights), grid.centers(), grid.width) {}

// The basis is evaluated outward from the nearest center: on an equidistant
// grid the ratio of neighbouring Gaussians is itself a geometric sequence, so
// the full sum costs three exponentials and a few products per point.
void InfluenceFunction::weight_basis(double z, std::span<double> out) const {
  const std::size_t n = centers_.size();
  if (out.size() != n) throw std::invalid_argument("weight_basis: output size mismatch");
  const double inv_w = 1.0 / width_;
  if (n == 1) {
    const double e = (z - centers_[0]) * inv_w;
    out[0] = std::exp(-0.5 * e * e);
    return;
  }
  const double step = centers_[1] - centers_[0];
  const double pos = std::round((z - centers_[0]) / step);
  const std::size_t nearest =
      static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n - 1)));
  const double e = (z - centers_[nearest]) * inv_w;
  const double a = step * inv_w;
  const double shrink = std::exp(-a * a);

  out[nearest] = std::exp(-0.5 * e * e);
  double ratio = std::exp(a * e - 0.5 * a * a);
  for (std::size_t j = nearest + 1; j < n; ++j) {
    out[j] = out[j - 1] * ratio;
    ratio *= shrink;
  }
  ratio = std::exp(-a * e - 0.5 * a * a);
  for (std::size_t j = nearest; j-- > 0;) {
    out[j] = out[j + 1] * ratio;
    ratio *= shrink;
  }
}

std::vector<double> InfluenceFunction::weight_basis(double z) const {
  std::vector<double> out(centers_.size());
  weight_basis(z, out);
  return out;
}

double InfluenceFunction::phi_from_basis(std::span<const double> basis) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) acc += weights_[j] * basis[j];
  return acc;
}

double InfluenceFunction::phi_prime_from_basis(double z, std::span<const double> basis) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < weights_.size(); ++j) acc += weights_[j] * basis[j] * (centers_[j] - z);
  return acc / (width_ * width_);
}

double InfluenceFunction::phi(double z) const {
  thread_local std::vector<double> basis;
  basis.resize(centers_.size());
  weight_basis(z, basis);
  return phi_from_basis(basis);
}

double InfluenceFunction::phi_prime(double z) const {
  thread_local std::vector<double> basis;
  basis.resize(centers_.size());
  weight_basis(z, basis);
  return phi_prime_from_basis(z, basis);
}

std::vector<double> fit_linear_weights(const RbfGrid& grid, double slope) {
  grid.validate();
  const std::vector<double> mu = grid.centers();
  const InfluenceFunction probe(grid, std::vector<double>(mu.size(), 0.0));
  const auto n = static_cast<Eigen::Index>(mu.size());
  Eigen::MatrixXd gram(n, n);
  Eigen::VectorXd target(n);
  std::vector<double> row(mu.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    probe.weight_basis(mu[i], row);
    for (Eigen::Index j = 0; j < n; ++j) gram(i, j) = row[j];
    target(i) = slope * mu[i];
  }
  const Eigen::VectorXd w = gram.colPivHouseholderQr().solve(target);
  return {w.data(), w.data() + w.size()};
}

}  // namespace trdpd
