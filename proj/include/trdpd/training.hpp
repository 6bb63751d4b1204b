#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trdpd/diffusion.hpp"
#include "trdpd/image.hpp"
#include "trdpd/lbfgs.hpp"

namespace trdpd {

struct TrainingSample {
  Image f;     // Poisson counts
  Image u_gt;  // clean intensities on the same scale
};

struct StageGradient {
  double d_beta = 0.0;
  std::vector<std::vector<double>> d_filter_coeffs;      // [filter][atom]
  std::vector<std::vector<double>> d_influence_weights;  // [filter][rbf center]
};

/// Gradient of the loss with respect to every trainable parameter, shaped
/// like DiffusionModel::stages().
struct ParamGradient {
  std::vector<StageGradient> stages;

  static ParamGradient zeros_like(const DiffusionModel& model);
  /// Same ordering as DiffusionModel::parameters().
  std::vector<double> flatten() const;
  void add(const ParamGradient& other);
};

/// Quantities cached by the forward pass for the reverse sweep.
struct TapeStage {
  Image u_in;                    // u_t
  Image u_tilde;                 // u~_{t+1}
  std::vector<Image> responses;  // k_i * u_t
};

struct BackpropTape {
  std::vector<TapeStage> stages;
  Image output;  // u_T
};

/// 0.5 * ||u_T - u_gt||^2
double loss(const Image& u_T, const Image& u_gt);
/// d loss / d u_T = u_T - u_gt
Image loss_gradient(const Image& u_T, const Image& u_gt);

/// d prox / d u~ = 0.5 * (1 + (u~ - lambda) / sqrt((u~ - lambda)^2 + 4 lambda f)).
double prox_jacobian_diag(double u_tilde, double lambda, double f);
Image prox_jacobian_diag(const Image& u_tilde, double lambda, const Image& f);

/// d prox / d beta for lambda = exp(beta), i.e. lambda * z with
/// z = 0.5 * (-1 + ((lambda - u~) + 2f) / sqrt((u~ - lambda)^2 + 4 lambda f)).
double prox_beta_grad(double u_tilde, double lambda, double f);
Image prox_lambda_grad(const Image& u_tilde, double lambda, const Image& f);

BackpropTape record_forward(const DiffusionModel& model, const Image& f);

using ProxJacobianFn = double (*)(double u_tilde, double lambda, double f);

struct BackpropResult {
  double loss = 0.0;
  ParamGradient grad;
};

/// Reverse-mode sweep through every stage. `jacobian` exists so tests can
/// substitute a corrupted prox derivative.
BackpropResult backprop(const DiffusionModel& model, const TrainingSample& sample, const BackpropTape& tape,
                        ProxJacobianFn jacobian = &prox_jacobian_diag);

/// Loss and gradient summed over a dataset. Samples run in parallel and are
/// reduced in dataset order.
BackpropResult dataset_gradient(const DiffusionModel& model, const std::vector<TrainingSample>& dataset,
                                ProxJacobianFn jacobian = &prox_jacobian_diag);

struct GradientCheckGroup {
  int stage = 0;
  std::string name;  // "beta", "filters" or "influence"
  std::size_t count = 0;
  double max_abs_error = 0.0;
  double max_abs_gradient = 0.0;
  /// max |analytic - numeric| / max |numeric| over the group.
  double rel_error = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckGroup> groups;
  double max_rel_error = 0.0;
};

/// Compares the analytic gradient against central differences with step
/// h_rel * max(1, |theta|) for every parameter.
GradientCheckReport finite_difference_check(const DiffusionModel& model, const TrainingSample& sample,
                                            double h_rel = 1e-3, ProxJacobianFn jacobian = &prox_jacobian_diag);

struct TrainConfig {
  ModelConfig model;
  LbfgsOptions optimizer;
  std::uint64_t seed = 0;
};

struct TrainResult {
  DiffusionModel model;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  std::vector<double> loss_history;
};

/// Jointly trains all stages on sum_s 0.5 ||u_T^s - u_gt^s||^2 and returns
/// the best iterate.
TrainResult train_joint(const std::vector<TrainingSample>& dataset, const TrainConfig& config);
TrainResult train_joint(const std::vector<TrainingSample>& dataset, const TrainConfig& config,
                        DiffusionModel initial);

}  // namespace trdpd
