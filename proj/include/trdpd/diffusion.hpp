#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "trdpd/filter_basis.hpp"
#include "trdpd/image.hpp"
#include "trdpd/influence.hpp"

namespace trdpd {

/// One diffusion stage in evaluated form: data weight lambda = exp(beta),
/// filters k_i and their paired influence functions phi_i.
struct StageParams {
  double beta = 0.0;
  std::vector<Kernel> filters;
  std::vector<InfluenceFunction> influences;

  double lambda() const { return std::exp(beta); }
  void validate() const;
};

/// Trainable parameters of a stage. Filters are stored as coefficients over
/// the model's zero-mean FilterBasis.
struct StageCoeffs {
  double beta = 0.0;
  std::vector<std::vector<double>> filter_coeffs;      // [filter][atom]
  std::vector<std::vector<double>> influence_weights;  // [filter][rbf center]
};

struct ModelConfig {
  double peak = 255.0;
  int stages = 5;
  int filter_size = 5;
  int num_filters = 0;  // 0 selects filter_size^2 - 1
  int rbf_count = 63;
  double rbf_range = 0.0;  // 0 selects 310 * peak / 255
  double rbf_width = 0.0;  // 0 selects the center spacing
  double filter_init_scale = 0.1;
  double influence_init_slope = 0.1;
  double beta_init = 0.0;

  RbfGrid resolved_grid() const;
};

class DiffusionModel {
 public:
  DiffusionModel(int filter_size, double training_peak, RbfGrid rbf, std::vector<StageCoeffs> stages);

  /// Filters are distinct basis atoms scaled by filter_init_scale, each
  /// influence function is a least-squares fit of slope * z and beta starts
  /// at beta_init.
  static DiffusionModel initialize(const ModelConfig& config);

  int filter_size() const { return filter_size_; }
  double training_peak() const { return training_peak_; }
  const RbfGrid& rbf() const { return rbf_; }
  const FilterBasis& basis() const { return basis_; }
  int num_stages() const { return static_cast<int>(stages_.size()); }
  int num_filters() const { return stages_.empty() ? 0 : static_cast<int>(stages_.front().filter_coeffs.size()); }

  const std::vector<StageCoeffs>& stages() const { return stages_; }
  std::vector<StageCoeffs>& stages() { return stages_; }

  StageParams stage_params(int t) const;

  /// Flattened parameter vector, stage-major: beta, filter coefficients
  /// (filter-major), influence weights (filter-major).
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> theta);

  void validate() const;

 private:
  int filter_size_;
  double training_peak_;
  RbfGrid rbf_;
  FilterBasis basis_;
  std::vector<StageCoeffs> stages_;
};

/// Point-wise proximal map of lambda * (u - f log u) with unit step:
/// (u~ - lambda + sqrt((u~ - lambda)^2 + 4 lambda f)) / 2.
double prox_poisson(double u_tilde, double lambda, double f);
Image prox_poisson(const Image& u_tilde, double lambda, const Image& f);

struct StepResult {
  Image u_next;
  Image u_tilde;
};

/// u~ = u_t - sum_i K_i^T phi_i(K_i u_t), then u_next = prox(u~, lambda, f).
/// When `responses` is non-null it receives the filter responses K_i u_t.
StepResult diffusion_step(const Image& u_t, const Image& f, const StageParams& stage,
                          std::vector<Image>* responses = nullptr);

/// Runs every stage starting from u_0 = f.
Image forward(const Image& f, const DiffusionModel& model);

}  // namespace trdpd
