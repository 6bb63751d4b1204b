#include "trdpd/diffusion.hpp"

#include <stdexcept>
#include <string>

#include "trdpd/parallel.hpp"

namespace trdpd {
namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

void check_counts(const Image& f) {
  for (double v : f.pixels()) {
    if (!(v >= 0.0)) throw std::invalid_argument("observed counts f must be non-negative");
  }
}

}  // namespace

void StageParams::validate() const {
  check_finite(beta, "beta");
  if (filters.size() != influences.size()) {
    throw std::invalid_argument("stage has " + std::to_string(filters.size()) + " filters but " +
                                std::to_string(influences.size()) + " influence functions");
  }
}

RbfGrid ModelConfig::resolved_grid() const {
  RbfGrid grid;
  grid.count = rbf_count;
  grid.range = rbf_range > 0.0 ? rbf_range : 310.0 * peak / 255.0;
  grid.width = rbf_width > 0.0 ? rbf_width : grid.spacing();
  if (grid.count == 1 && !(rbf_width > 0.0)) grid.width = grid.range;
  return grid;
}

DiffusionModel::DiffusionModel(int filter_size, double training_peak, RbfGrid rbf,
                               std::vector<StageCoeffs> stages)
    : filter_size_(filter_size),
      training_peak_(training_peak),
      rbf_(rbf),
      basis_(filter_size),
      stages_(std::move(stages)) {
  validate();
}

void DiffusionModel::validate() const {
  if (!(training_peak_ > 0.0) || !std::isfinite(training_peak_)) {
    throw std::invalid_argument("training peak must be positive");
  }
  rbf_.validate();
  if (stages_.empty()) throw std::invalid_argument("model needs at least one stage");
  const std::size_t nk = stages_.front().filter_coeffs.size();
  for (const auto& s : stages_) {
    check_finite(s.beta, "beta");
    if (s.filter_coeffs.size() != nk || s.influence_weights.size() != nk) {
      throw std::invalid_argument("all stages must share the same filter count");
    }
    for (const auto& c : s.filter_coeffs) {
      if (c.size() != basis_.count()) throw std::invalid_argument("filter coefficient count mismatch");
    }
    for (const auto& w : s.influence_weights) {
      if (w.size() != static_cast<std::size_t>(rbf_.count)) {
        throw std::invalid_argument("influence weight count mismatch");
      }
    }
  }
}

DiffusionModel DiffusionModel::initialize(const ModelConfig& config) {
  if (config.stages < 1) throw std::invalid_argument("model needs at least one stage");
  const FilterBasis basis(config.filter_size);
  const int nk = config.num_filters > 0 ? config.num_filters : static_cast<int>(basis.count());
  if (static_cast<std::size_t>(nk) > basis.count()) {
    throw std::invalid_argument("at most " + std::to_string(basis.count()) + " filters fit a " +
                                std::to_string(config.filter_size) + "x" +
                                std::to_string(config.filter_size) + " basis");
  }
  const RbfGrid grid = config.resolved_grid();
  const std::vector<double> weights = fit_linear_weights(grid, config.influence_init_slope);

  std::vector<StageCoeffs> stages(config.stages);
  for (auto& s : stages) {
    s.beta = config.beta_init;
    s.filter_coeffs.assign(nk, std::vector<double>(basis.count(), 0.0));
    for (int i = 0; i < nk; ++i) s.filter_coeffs[i][i] = config.filter_init_scale;
    s.influence_weights.assign(nk, weights);
  }
  return DiffusionModel(config.filter_size, config.peak, grid, std::move(stages));
}

StageParams DiffusionModel::stage_params(int t) const {
  const StageCoeffs& s = stages_.at(t);
  StageParams p;
  p.beta = s.beta;
  p.filters.reserve(s.filter_coeffs.size());
  p.influences.reserve(s.filter_coeffs.size());
  for (std::size_t i = 0; i < s.filter_coeffs.size(); ++i) {
    p.filters.push_back(basis_.synthesize(s.filter_coeffs[i]));
    p.influences.emplace_back(rbf_, s.influence_weights[i]);
  }
  return p;
}

std::size_t DiffusionModel::parameter_count() const {
  const std::size_t per_filter = basis_.count() + static_cast<std::size_t>(rbf_.count);
  return stages_.size() * (1 + static_cast<std::size_t>(num_filters()) * per_filter);
}

std::vector<double> DiffusionModel::parameters() const {
  std::vector<double> theta;
  theta.reserve(parameter_count());
  for (const auto& s : stages_) {
    theta.push_back(s.beta);
    for (const auto& c : s.filter_coeffs) theta.insert(theta.end(), c.begin(), c.end());
    for (const auto& w : s.influence_weights) theta.insert(theta.end(), w.begin(), w.end());
  }
  return theta;
}

void DiffusionModel::set_parameters(std::span<const double> theta) {
  if (theta.size() != parameter_count()) throw std::invalid_argument("parameter vector length mismatch");
  std::size_t k = 0;
  for (auto& s : stages_) {
    s.beta = theta[k++];
    for (auto& c : s.filter_coeffs)
      for (double& v : c) v = theta[k++];
    for (auto& w : s.influence_weights)
      for (double& v : w) v = theta[k++];
  }
}

double prox_poisson(double u_tilde, double lambda, double f) {
  if (!(lambda > 0.0)) throw std::invalid_argument("prox_poisson: lambda must be positive");
  if (!(f >= 0.0)) throw std::invalid_argument("prox_poisson: counts must be non-negative");
  const double a = u_tilde - lambda;
  if (f == 0.0) return a > 0.0 ? a : 0.0;
  const double root = std::sqrt(a * a + 4.0 * lambda * f);
  if (a >= 0.0) return 0.5 * (a + root);
  // a + root cancels when a < 0; use the conjugate form.
  return 2.0 * lambda * f / (root - a);
}

Image prox_poisson(const Image& u_tilde, double lambda, const Image& f) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("prox_poisson: lambda must be positive");
  if (!u_tilde.same_shape(f)) throw std::invalid_argument("prox_poisson: shape mismatch");
  check_counts(f);
  Image out(u_tilde.width(), u_tilde.height());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = prox_poisson(u_tilde[p], lambda, f[p]);
  return out;
}

StepResult diffusion_step(const Image& u_t, const Image& f, const StageParams& stage,
                          std::vector<Image>* responses) {
  stage.validate();
  if (!u_t.same_shape(f)) throw std::invalid_argument("diffusion_step: shape mismatch");
  const std::size_t nk = stage.filters.size();
  std::vector<Image> x(nk);
  std::vector<Image> flux(nk);

  parallel_for(nk, [&](std::size_t i) {
    x[i] = conv2d_sym(u_t, stage.filters[i]);
    const InfluenceFunction& phi = stage.influences[i];
    Image g(u_t.width(), u_t.height());
    std::vector<double> basis(phi.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
      phi.weight_basis(x[i][p], basis);
      g[p] = phi.phi_from_basis(basis);
    }
    flux[i] = conv2d_adjoint(g, stage.filters[i]);
  });

  StepResult result;
  result.u_tilde = u_t;
  for (std::size_t i = 0; i < nk; ++i) {
    for (std::size_t p = 0; p < u_t.size(); ++p) result.u_tilde[p] -= flux[i][p];
  }
  result.u_next = prox_poisson(result.u_tilde, stage.lambda(), f);
  if (responses != nullptr) *responses = std::move(x);
  return result;
}

Image forward(const Image& f, const DiffusionModel& model) {
  if (model.num_stages() == 0) throw std::invalid_argument("forward: empty model");
  check_counts(f);
  Image u = f;
  for (int t = 0; t < model.num_stages(); ++t) u = diffusion_step(u, f, model.stage_params(t)).u_next;
  return u;
}

}  // namespace trdpd
