#include "trdpd/filter_basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trdpd {

FilterBasis::FilterBasis(int size) : size_(size) {
  if (size <= 0 || size % 2 == 0) throw std::invalid_argument("filter size must be odd and positive");
  const int m = size;
  std::vector<std::vector<double>> dct(m, std::vector<double>(m));
  for (int f = 0; f < m; ++f) {
    const double scale = std::sqrt((f == 0 ? 1.0 : 2.0) / m);
    for (int i = 0; i < m; ++i) dct[f][i] = scale * std::cos(std::numbers::pi * (2 * i + 1) * f / (2.0 * m));
  }
  for (int p = 0; p < m; ++p) {
    for (int q = 0; q < m; ++q) {
      if (p == 0 && q == 0) continue;
      Kernel atom(m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) atom(i, j) = dct[p][i] * dct[q][j];
      atoms_.push_back(std::move(atom));
    }
  }
}

Kernel FilterBasis::synthesize(std::span<const double> coeffs) const {
  if (coeffs.size() != atoms_.size()) throw std::invalid_argument("filter coefficient count mismatch");
  Kernel k(size_);
  auto out = k.coeffs();
  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    const auto atom = atoms_[a].coeffs();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coeffs[a] * atom[i];
  }
  return k;
}

std::vector<double> FilterBasis::project(const Kernel& k) const {
  if (k.size() != size_) throw std::invalid_argument("kernel size does not match basis");
  std::vector<double> coeffs(atoms_.size());
  const auto kc = k.coeffs();
  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    const auto atom = atoms_[a].coeffs();
    double acc = 0.0;
    for (std::size_t i = 0; i < kc.size(); ++i) acc += atom[i] * kc[i];
    coeffs[a] = acc;
  }
  return coeffs;
}

}  // namespace trdpd
