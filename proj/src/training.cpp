#include "trdpd/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trdpd/parallel.hpp"

namespace trdpd {

ParamGradient ParamGradient::zeros_like(const DiffusionModel& model) {
  ParamGradient g;
  g.stages.resize(model.stages().size());
  for (std::size_t t = 0; t < g.stages.size(); ++t) {
    const StageCoeffs& s = model.stages()[t];
    g.stages[t].d_filter_coeffs.assign(s.filter_coeffs.size(), std::vector<double>(model.basis().count(), 0.0));
    g.stages[t].d_influence_weights.assign(s.influence_weights.size(),
                                           std::vector<double>(static_cast<std::size_t>(model.rbf().count), 0.0));
  }
  return g;
}

std::vector<double> ParamGradient::flatten() const {
  std::vector<double> out;
  for (const auto& s : stages) {
    out.push_back(s.d_beta);
    for (const auto& c : s.d_filter_coeffs) out.insert(out.end(), c.begin(), c.end());
    for (const auto& w : s.d_influence_weights) out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

void ParamGradient::add(const ParamGradient& other) {
  if (other.stages.size() != stages.size()) throw std::invalid_argument("gradient shape mismatch");
  for (std::size_t t = 0; t < stages.size(); ++t) {
    stages[t].d_beta += other.stages[t].d_beta;
    auto add_rows = [](auto& dst, const auto& src) {
      for (std::size_t i = 0; i < dst.size(); ++i)
        for (std::size_t j = 0; j < dst[i].size(); ++j) dst[i][j] += src[i][j];
    };
    add_rows(stages[t].d_filter_coeffs, other.stages[t].d_filter_coeffs);
    add_rows(stages[t].d_influence_weights, other.stages[t].d_influence_weights);
  }
}

double loss(const Image& u_T, const Image& u_gt) {
  if (!u_T.same_shape(u_gt)) throw std::invalid_argument("loss: shape mismatch");
  double acc = 0.0;
  for (std::size_t p = 0; p < u_T.size(); ++p) {
    const double d = u_T[p] - u_gt[p];
    acc += d * d;
  }
  return 0.5 * acc;
}

Image loss_gradient(const Image& u_T, const Image& u_gt) {
  if (!u_T.same_shape(u_gt)) throw std::invalid_argument("loss_gradient: shape mismatch");
  Image g(u_T.width(), u_T.height());
  for (std::size_t p = 0; p < g.size(); ++p) g[p] = u_T[p] - u_gt[p];
  return g;
}

double prox_jacobian_diag(double u_tilde, double lambda, double f) {
  const double a = u_tilde - lambda;
  const double s = std::sqrt(a * a + 4.0 * lambda * f);
  if (s == 0.0) return 0.5;
  if (a >= 0.0) return 0.5 * (1.0 + a / s);
  return 2.0 * lambda * f / (s * (s - a));
}

double prox_beta_grad(double u_tilde, double lambda, double f) {
  const double a = u_tilde - lambda;
  const double s = std::sqrt(a * a + 4.0 * lambda * f);
  if (s == 0.0) return -0.5 * lambda;
  // -a - s cancels for a < 0; rewrite it as -4 lambda f / (s - a).
  const double num = a >= 0.0 ? 2.0 * f - a - s : 2.0 * f - 4.0 * lambda * f / (s - a);
  return 0.5 * lambda * num / s;
}

namespace {

template <class Fn>
Image map_prox(const Image& u_tilde, double lambda, const Image& f, Fn fn) {
  if (!u_tilde.same_shape(f)) throw std::invalid_argument("shape mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  Image out(u_tilde.width(), u_tilde.height());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = fn(u_tilde[p], lambda, f[p]);
  return out;
}

}  // namespace

Image prox_jacobian_diag(const Image& u_tilde, double lambda, const Image& f) {
  return map_prox(u_tilde, lambda, f, [](double u, double l, double c) { return prox_jacobian_diag(u, l, c); });
}

Image prox_lambda_grad(const Image& u_tilde, double lambda, const Image& f) {
  return map_prox(u_tilde, lambda, f, prox_beta_grad);
}

BackpropTape record_forward(const DiffusionModel& model, const Image& f) {
  if (model.num_stages() == 0) throw std::invalid_argument("record_forward: empty model");
  BackpropTape tape;
  tape.stages.resize(static_cast<std::size_t>(model.num_stages()));
  Image u = f;
  for (int t = 0; t < model.num_stages(); ++t) {
    TapeStage& rec = tape.stages[t];
    rec.u_in = u;
    StepResult step = diffusion_step(u, f, model.stage_params(t), &rec.responses);
    rec.u_tilde = std::move(step.u_tilde);
    u = std::move(step.u_next);
  }
  tape.output = std::move(u);
  return tape;
}

BackpropResult backprop(const DiffusionModel& model, const TrainingSample& sample, const BackpropTape& tape,
                        ProxJacobianFn jacobian) {
  if (tape.stages.size() != static_cast<std::size_t>(model.num_stages())) {
    throw std::invalid_argument("backprop: tape has a different number of stages than the model");
  }
  if (!sample.f.same_shape(sample.u_gt) || !tape.output.same_shape(sample.f)) {
    throw std::invalid_argument("backprop: tape and sample shapes differ");
  }
  const std::size_t nk = static_cast<std::size_t>(model.num_filters());
  for (const TapeStage& rec : tape.stages) {
    if (rec.responses.size() != nk || !rec.u_in.same_shape(sample.f) || !rec.u_tilde.same_shape(sample.f)) {
      throw std::invalid_argument("backprop: tape does not match the model");
    }
  }

  BackpropResult result;
  result.loss = loss(tape.output, sample.u_gt);
  result.grad = ParamGradient::zeros_like(model);
  const Image& f = sample.f;
  const int m = model.filter_size();

  Image v = loss_gradient(tape.output, sample.u_gt);
  for (int t = model.num_stages() - 1; t >= 0; --t) {
    const TapeStage& rec = tape.stages[t];
    const StageParams stage = model.stage_params(t);
    const double lambda = stage.lambda();
    StageGradient& sg = result.grad.stages[t];

    // Through the prox: beta enters directly, u~ through the diagonal Jacobian.
    Image w(v.width(), v.height());
    for (std::size_t p = 0; p < v.size(); ++p) {
      sg.d_beta += prox_beta_grad(rec.u_tilde[p], lambda, f[p]) * v[p];
      w[p] = jacobian(rec.u_tilde[p], lambda, f[p]) * v[p];
    }

    // u~ = u - sum_i K_i^T phi_i(K_i u).
    std::vector<Image> back(nk);
    parallel_for(nk, [&](std::size_t i) {
      const Kernel& k = stage.filters[i];
      const InfluenceFunction& phi = stage.influences[i];
      const Image& x = rec.responses[i];
      const Image q = conv2d_sym(w, k);
      Image g(x.width(), x.height());
      Image r(x.width(), x.height());
      std::vector<double> basis(phi.size());
      std::vector<double>& dw = sg.d_influence_weights[i];
      for (std::size_t p = 0; p < x.size(); ++p) {
        phi.weight_basis(x[p], basis);
        g[p] = phi.phi_from_basis(basis);
        r[p] = phi.phi_prime_from_basis(x[p], basis) * q[p];
        for (std::size_t j = 0; j < basis.size(); ++j) dw[j] -= q[p] * basis[j];
      }
      // k_i appears in both the inner response and the outer transpose.
      Kernel dk = conv2d_kernel_grad(w, g, m);
      const Kernel dk_inner = conv2d_kernel_grad(rec.u_in, r, m);
      for (std::size_t a = 0; a < dk.coeffs().size(); ++a) dk.coeffs()[a] = -(dk.coeffs()[a] + dk_inner.coeffs()[a]);
      sg.d_filter_coeffs[i] = model.basis().project(dk);
      back[i] = conv2d_adjoint(r, k);
    });

    v = std::move(w);
    for (std::size_t i = 0; i < nk; ++i) {
      for (std::size_t p = 0; p < v.size(); ++p) v[p] -= back[i][p];
    }
  }
  return result;
}

BackpropResult dataset_gradient(const DiffusionModel& model, const std::vector<TrainingSample>& dataset,
                                ProxJacobianFn jacobian) {
  std::vector<BackpropResult> per_sample(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t s) {
    const BackpropTape tape = record_forward(model, dataset[s].f);
    per_sample[s] = backprop(model, dataset[s], tape, jacobian);
  });
  BackpropResult total;
  total.grad = ParamGradient::zeros_like(model);
  for (const auto& r : per_sample) {
    total.loss += r.loss;
    total.grad.add(r.grad);
  }
  return total;
}

GradientCheckReport finite_difference_check(const DiffusionModel& model, const TrainingSample& sample,
                                            double h_rel, ProxJacobianFn jacobian) {
  const BackpropTape tape = record_forward(model, sample.f);
  const std::vector<double> analytic = backprop(model, sample, tape, jacobian).grad.flatten();
  const std::vector<double> theta = model.parameters();

  GradientCheckReport report;
  const std::size_t nk = static_cast<std::size_t>(model.num_filters());
  const std::size_t filter_len = nk * model.basis().count();
  const std::size_t weight_len = nk * static_cast<std::size_t>(model.rbf().count);
  for (int t = 0; t < model.num_stages(); ++t) {
    report.groups.push_back({t, "beta", 1});
    report.groups.push_back({t, "filters", filter_len});
    report.groups.push_back({t, "influence", weight_len});
  }

  std::vector<double> numeric(theta.size());
  parallel_for(theta.size(), [&](std::size_t j) {
    DiffusionModel probe = model;
    std::vector<double> th = theta;
    const double h = h_rel * std::max(1.0, std::abs(theta[j]));
    th[j] = theta[j] + h;
    probe.set_parameters(th);
    const double up = loss(forward(sample.f, probe), sample.u_gt);
    th[j] = theta[j] - h;
    probe.set_parameters(th);
    const double down = loss(forward(sample.f, probe), sample.u_gt);
    numeric[j] = (up - down) / (2.0 * h);
  });

  std::size_t offset = 0;
  for (auto& group : report.groups) {
    double max_num = 0.0;
    for (std::size_t j = offset; j < offset + group.count; ++j) {
      group.max_abs_error = std::max(group.max_abs_error, std::abs(analytic[j] - numeric[j]));
      group.max_abs_gradient = std::max(group.max_abs_gradient, std::abs(analytic[j]));
      max_num = std::max(max_num, std::abs(numeric[j]));
    }
    const double scale = std::max(max_num, group.max_abs_gradient);
    group.rel_error = scale > 0.0 ? group.max_abs_error / scale : 0.0;
    report.max_rel_error = std::max(report.max_rel_error, group.rel_error);
    offset += group.count;
  }
  return report;
}

TrainResult train_joint(const std::vector<TrainingSample>& dataset, const TrainConfig& config) {
  return train_joint(dataset, config, DiffusionModel::initialize(config.model));
}

TrainResult train_joint(const std::vector<TrainingSample>& dataset, const TrainConfig& config,
                        DiffusionModel initial) {
  if (dataset.empty()) throw std::invalid_argument("train_joint: empty dataset");
  for (const auto& s : dataset) {
    if (!s.f.same_shape(s.u_gt)) throw std::invalid_argument("train_joint: sample f and u_gt differ in shape");
  }
  DiffusionModel work = initial;
  const Objective objective = [&](std::span<const double> x, std::span<double> grad) {
    work.set_parameters(x);
    const BackpropResult r = dataset_gradient(work, dataset);
    const std::vector<double> flat = r.grad.flatten();
    std::copy(flat.begin(), flat.end(), grad.begin());
    return r.loss;
  };

  const LbfgsResult opt = minimize_lbfgs(objective, initial.parameters(), config.optimizer);
  TrainResult result{std::move(initial), 0.0, 0.0, 0, 0, LbfgsStatus::max_iterations, {}};
  result.model.set_parameters(opt.x);
  result.initial_loss = opt.initial_value;
  result.final_loss = opt.value;
  result.iterations = opt.iterations;
  result.evaluations = opt.evaluations;
  result.status = opt.status;
  result.loss_history = opt.history;
  return result;
}

}  // namespace trdpd
