#pragma once

// Central-difference gradient of the end-to-end quadratic loss, computed in
// test code from forward() alone.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trdpd/diffusion.hpp"
#include "trdpd/parallel.hpp"

namespace oracle {

inline double quadratic_loss(const trdpd::Image& u, const trdpd::Image& gt) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += 0.5 * (u[i] - gt[i]) * (u[i] - gt[i]);
  return s;
}

inline std::vector<double> fd_gradient(const trdpd::DiffusionModel& model, const trdpd::Image& f,
                                       const trdpd::Image& gt, double h_rel) {
  const std::vector<double> theta = model.parameters();
  std::vector<double> g(theta.size());
  trdpd::parallel_for(theta.size(), [&](std::size_t j) {
    trdpd::DiffusionModel probe = model;
    std::vector<double> th = theta;
    const double h = h_rel * std::max(1.0, std::abs(theta[j]));
    th[j] = theta[j] + h;
    probe.set_parameters(th);
    const double up = quadratic_loss(trdpd::forward(f, probe), gt);
    th[j] = theta[j] - h;
    probe.set_parameters(th);
    const double down = quadratic_loss(trdpd::forward(f, probe), gt);
    g[j] = (up - down) / (2.0 * h);
  });
  return g;
}

struct GroupError {
  int stage;
  std::string name;
  double rel;
};

/// Per (stage, group) relative error max|a - n| / max(max|a|, max|n|),
/// using the stage-major layout beta, filter coefficients, influence weights.
inline std::vector<GroupError> group_errors(const trdpd::DiffusionModel& model, const std::vector<double>& analytic,
                                            const std::vector<double>& numeric) {
  const std::size_t nk = static_cast<std::size_t>(model.num_filters());
  const std::size_t sizes[3] = {1, nk * model.basis().count(), nk * static_cast<std::size_t>(model.rbf().count)};
  const char* names[3] = {"beta", "filters", "influence"};
  std::vector<GroupError> out;
  std::size_t off = 0;
  for (int t = 0; t < model.num_stages(); ++t) {
    for (int g = 0; g < 3; ++g) {
      double err = 0.0, scale = 0.0;
      for (std::size_t j = off; j < off + sizes[g]; ++j) {
        err = std::max(err, std::abs(analytic[j] - numeric[j]));
        scale = std::max({scale, std::abs(analytic[j]), std::abs(numeric[j])});
      }
      out.push_back({t, names[g], scale > 0.0 ? err / scale : 0.0});
      off += sizes[g];
    }
  }
  return out;
}

inline double max_rel(const std::vector<GroupError>& groups) {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.rel);
  return m;
}

}  // namespace oracle
