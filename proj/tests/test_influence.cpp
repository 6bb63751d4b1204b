#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "oracles.hpp"
#include "trdpd/filter_basis.hpp"
#include "trdpd/influence.hpp"

using namespace trdpd;

namespace {

// Direct evaluation of the Gaussian sum, one exp per center.
double direct_phi(const std::vector<double>& w, const std::vector<double>& mu, double gamma, double z) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * std::exp(-(z - mu[j]) * (z - mu[j]) / (2 * gamma * gamma));
  return s;
}

InfluenceFunction random_fn(std::mt19937_64& e, const RbfGrid& grid) {
  std::vector<double> w(grid.count);
  for (double& v : w) v = oracle::uniform(e, -1.0, 1.0);
  return InfluenceFunction(grid, w);
}

}  // namespace

TEST_CASE("phi examples") {
  SUBCASE("zero weights") {
    const RbfGrid grid = RbfGrid::for_peak(255.0);
    InfluenceFunction fn(grid, std::vector<double>(grid.count, 0.0));
    for (double z : {-400.0, -3.0, 0.0, 12.5, 310.0}) {
      CHECK(fn.phi(z) == 0.0);
      CHECK(fn.phi_prime(z) == 0.0);
    }
  }
  SUBCASE("single Gaussian peaks at its center") {
    InfluenceFunction fn({1.0}, {2.5}, 0.7);
    CHECK(fn.phi(2.5) == 1.0);
    CHECK(fn.phi_prime(2.5) == 0.0);
    CHECK(fn.weight_basis(2.5)[0] == 1.0);
  }
  SUBCASE("odd pair cancels at the origin") {
    InfluenceFunction fn({1.0, -1.0}, {-1.0, 1.0}, 1.0);
    CHECK(std::abs(fn.phi(0.0)) < 1e-16);
  }
}

TEST_CASE("influence function validation") {
  CHECK_THROWS_AS(InfluenceFunction({}, {}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(InfluenceFunction({1.0}, {0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(InfluenceFunction({1.0, 1.0}, {0.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(InfluenceFunction({1.0, 1.0, 1.0}, {0.0, 1.0, 2.5}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(InfluenceFunction({1.0, 1.0}, {1.0, 0.0}, 1.0), std::invalid_argument);
  RbfGrid bad;
  bad.count = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("default grid follows the peak") {
  const RbfGrid g = RbfGrid::for_peak(4.0);
  CHECK(g.count == 63);
  CHECK(g.range == doctest::Approx(310.0 * 4.0 / 255.0));
  CHECK(g.width == doctest::Approx(g.spacing()));
  const auto mu = g.centers();
  REQUIRE(mu.size() == 63);
  CHECK(mu.front() == doctest::Approx(-g.range));
  CHECK(mu.back() == doctest::Approx(g.range));
  CHECK(mu[31] == doctest::Approx(0.0));
}

TEST_CASE("phi agrees with a direct Gaussian sum") {
  auto& e = oracle::rng(21);
  for (double peak : {1.0, 4.0, 40.0, 255.0}) {
    const RbfGrid grid = RbfGrid::for_peak(peak);
    const InfluenceFunction fn = random_fn(e, grid);
    const std::vector<double> w(fn.weights().begin(), fn.weights().end());
    const auto mu = grid.centers();
    for (int i = 0; i < 50; ++i) {
      const double z = oracle::uniform(e, -1.5 * grid.range, 1.5 * grid.range);
      const double ref = direct_phi(w, mu, grid.width, z);
      CHECK(std::abs(fn.phi(z) - ref) < 1e-13 * std::max(1.0, std::abs(ref)) + 1e-14);
    }
  }
}

TEST_CASE("phi_prime matches central differences") {
  auto& e = oracle::rng(22);
  for (double peak : {1.0, 4.0, 255.0}) {
    const RbfGrid grid = RbfGrid::for_peak(peak);
    const InfluenceFunction fn = random_fn(e, grid);
    for (int i = 0; i < 40; ++i) {
      const double z = oracle::uniform(e, -grid.range, grid.range);
      const double h = 1e-5 * std::max(1.0, std::abs(z));
      const double fd = oracle::central_difference([&](double t) { return fn.phi(t); }, z, h);
      const double an = fn.phi_prime(z);
      // Curvature of phi scales like 1/gamma^2, which bounds truncation error.
      const double scale = std::max({1.0, std::abs(an), std::abs(fn.phi(z)) / grid.width});
      CHECK(std::abs(an - fd) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("weight basis exposes d phi / d w") {
  auto& e = oracle::rng(23);
  const RbfGrid grid = RbfGrid::for_peak(40.0);
  InfluenceFunction fn = random_fn(e, grid);
  const auto mu = grid.centers();
  CHECK(fn.weight_basis(mu[0])[0] == 1.0);
  for (int i = 0; i < 30; ++i) {
    const double z = oracle::uniform(e, -60.0, 60.0);
    const auto basis = fn.weight_basis(z);
    const double d = std::inner_product(fn.weights().begin(), fn.weights().end(), basis.begin(), 0.0);
    CHECK(std::abs(d - fn.phi(z)) < 1e-14 * std::max(1.0, std::abs(d)));
    CHECK(fn.phi_from_basis(basis) == doctest::Approx(fn.phi(z)).epsilon(1e-14));
    CHECK(fn.phi_prime_from_basis(z, basis) == doctest::Approx(fn.phi_prime(z)).epsilon(1e-12));
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const double arg = (z - mu[j]) * (z - mu[j]) / (2 * grid.width * grid.width);
      const double ref = std::exp(-arg);
      // exp(-x) is only determined to about x * eps relative
      CHECK(std::abs(basis[j] - ref) <= 1e-13 * std::max(1.0, arg) * ref + 1e-300);
    }
    // Linearity in w: a perturbation of w_j moves phi by eps * basis_j.
    const std::size_t j = static_cast<std::size_t>(i) % basis.size();
    const double eps = 0.25;
    const double before = fn.phi_from_basis(basis);
    fn.weights()[j] += eps;
    CHECK(fn.phi_from_basis(basis) - before == doctest::Approx(eps * basis[j]).epsilon(1e-10));
    fn.weights()[j] -= eps;
  }
}

TEST_CASE("phi is linear in the weights and bounded by the weight mass") {
  auto& e = oracle::rng(24);
  const RbfGrid grid = RbfGrid::for_peak(4.0);
  const InfluenceFunction a = random_fn(e, grid);
  const InfluenceFunction b = random_fn(e, grid);
  std::vector<double> sum(grid.count);
  double mass = 0.0;
  for (int j = 0; j < grid.count; ++j) {
    sum[j] = a.weights()[j] + b.weights()[j];
    mass += std::abs(a.weights()[j]);
  }
  const InfluenceFunction ab(grid, sum);
  for (int i = 0; i < 100; ++i) {
    const double z = oracle::uniform(e, -10.0, 10.0);
    CHECK(ab.phi(z) == doctest::Approx(a.phi(z) + b.phi(z)).epsilon(1e-12));
    CHECK(std::abs(a.phi(z)) <= mass);
  }
}

TEST_CASE("least-squares linear fit reproduces slope * z inside the grid") {
  for (double peak : {1.0, 4.0, 40.0, 255.0}) {
    const RbfGrid grid = RbfGrid::for_peak(peak);
    const InfluenceFunction fn(grid, fit_linear_weights(grid, 0.1));
    for (double t = -0.8; t <= 0.8; t += 0.05) {
      const double z = t * grid.range;
      CHECK(std::abs(fn.phi(z) - 0.1 * z) < 1e-3 * std::max(1.0, 0.1 * grid.range));
    }
  }
}

TEST_CASE("filter basis is orthonormal and zero-mean") {
  for (int m : {3, 5, 7}) {
    const FilterBasis basis(m);
    REQUIRE(basis.count() == static_cast<std::size_t>(m * m - 1));
    for (std::size_t i = 0; i < basis.count(); ++i) {
      double mean = 0.0;
      for (double v : basis.atom(i).coeffs()) mean += v;
      CHECK(std::abs(mean) < 1e-14);
      for (std::size_t j = 0; j < basis.count(); ++j) {
        double ip = 0.0;
        for (int k = 0; k < m * m; ++k) ip += basis.atom(i).coeffs()[k] * basis.atom(j).coeffs()[k];
        CHECK(ip == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-13));
      }
    }
    auto& e = oracle::rng(25);
    std::vector<double> c(basis.count());
    for (double& v : c) v = oracle::uniform(e, -1, 1);
    const auto back = basis.project(basis.synthesize(c));
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(back[i] == doctest::Approx(c[i]).epsilon(1e-13));
  }
}
