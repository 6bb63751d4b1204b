// Acceptance gate: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exit status is non-zero if any gating
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "grad_oracle.hpp"
#include "oracles.hpp"
#include "trdpd/commands.hpp"
#include "trdpd/metrics.hpp"
#include "trdpd/parallel.hpp"
#include "trdpd/poisson.hpp"
#include "trdpd/synthetic.hpp"
#include "trdpd/training.hpp"

using namespace trdpd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

void report(int id, const char* name, const Outcome& o, bool gating = true) {
  std::printf("%s  #%d %-28s %s\n", gating ? (o.pass ? "PASS" : "FAIL") : "INFO", id, name, o.detail.c_str());
  std::fflush(stdout);
}

// 1. Closed-form prox against a 1-D numerical minimizer.
Outcome prox_oracle() {
  const auto start = Clock::now();
  auto& e = oracle::rng(1001);
  double max_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double ut = oracle::uniform(e, -10.0, 10.0);
    double lambda = 0.0;
    while (lambda == 0.0) lambda = oracle::uniform(e, 0.0, 5.0);
    const double f = oracle::uniform(e, 0.0, 50.0);
    max_err = std::max(max_err, std::abs(prox_poisson(ut, lambda, f) - oracle::prox_minimizer(ut, lambda, f)));
  }
  const double t = seconds_since(start);
  std::ostringstream s;
  s << "max abs err " << max_err << " (< 1e-06), " << t << " s (< 5 s)";
  return {max_err < 1e-6 && t < 5.0, s.str()};
}

// 2. <Kx, y> == <x, K^T y>.
Outcome adjoint_exactness() {
  const auto start = Clock::now();
  auto& e = oracle::rng(1002);
  double max_err = 0.0;
  for (int m : {3, 5, 7, 9}) {
    for (int draw = 0; draw < 20; ++draw) {
      const int w = 8 + static_cast<int>(e() % 57);
      const int h = 8 + static_cast<int>(e() % 57);
      const Image x = oracle::random_image(w, h, e);
      const Image y = oracle::random_image(w, h, e);
      const Kernel k = oracle::random_kernel(m, e);
      max_err = std::max(max_err, std::abs(dot(conv2d_sym(x, k), y) - dot(x, conv2d_adjoint(y, k))));
    }
  }
  const double t = seconds_since(start);
  std::ostringstream s;
  s << "max |<Kx,y>-<x,K^T y>| " << max_err << " (< 1e-10), " << t << " s (< 5 s)";
  return {max_err < 1e-10 && t < 5.0, s.str()};
}

// 3. Analytic gradient of a 3x3, 2-stage model against central differences.
Outcome gradient_check() {
  const auto start = Clock::now();
  cli::GradcheckOptions opt = cli::default_gradcheck_options();
  opt.seed = 3;
  // The command checks its own perturbed model with the library's FD sweep;
  // a second, independently perturbed model is checked against the
  // test-side oracle.
  const GradientCheckReport lib = cli::run_gradcheck(opt);

  ModelConfig cfg = opt.model;
  DiffusionModel model = DiffusionModel::initialize(cfg);
  auto& e = oracle::rng(1003);
  double wmax = 0.0;
  for (double w : model.stages()[0].influence_weights[0]) wmax = std::max(wmax, std::abs(w));
  for (auto& st : model.stages()) {
    st.beta = oracle::uniform(e, -0.7, 0.7);
    for (auto& c : st.filter_coeffs)
      for (double& v : c) v += oracle::uniform(e, -0.08, 0.08);
    for (auto& w : st.influence_weights)
      for (double& v : w) v += wmax * oracle::uniform(e, -0.1, 0.1);
  }
  TrainingSample s;
  s.u_gt = scale_to_peak(synthetic_scene(32, 32, 1003), cfg.peak);
  s.f = sample_poisson(s.u_gt, 1004);
  const auto analytic = backprop(model, s, record_forward(model, s.f)).grad.flatten();
  const auto groups = oracle::group_errors(model, analytic, oracle::fd_gradient(model, s.f, s.u_gt, 1e-3));
  const double oracle_err = oracle::max_rel(groups);

  const double t = seconds_since(start);
  std::ostringstream out;
  out << "oracle max rel err " << oracle_err << ", gradcheck command " << lib.max_rel_error << " (< 1e-04, "
      << groups.size() << " groups), " << t << " s (< 120 s)";
  return {oracle_err < 1e-4 && lib.max_rel_error < 1e-4 && t < 120.0, out.str()};
}

// 4. Train 5x5, 3 stages on 16 patches at peak 4; evaluate on 4 held-out.
Outcome training_efficacy() {
  const auto start = Clock::now();
  const double peak = 4.0;
  const int patch = 64;
  std::mt19937_64 crop_rng(2024);
  std::vector<TrainingSample> train, test;
  for (int n = 0; n < 20; ++n) {
    const Image scene = synthetic_scene(128, 128, 5000 + n);
    const int row = static_cast<int>(crop_rng() % (128 - patch + 1));
    const int col = static_cast<int>(crop_rng() % (128 - patch + 1));
    TrainingSample s;
    s.u_gt = scale_to_peak(crop(scene, row, col, patch, patch), peak);
    s.f = sample_poisson(s.u_gt, derive_seed(77, n));
    (n < 16 ? train : test).push_back(std::move(s));
  }

  TrainConfig cfg;
  cfg.model.peak = peak;
  cfg.model.stages = 3;
  cfg.model.filter_size = 5;
  cfg.seed = 77;
  const TrainResult r = train_joint(train, cfg);

  double psnr_noisy = 0.0, psnr_out = 0.0;
  for (const auto& s : test) {
    psnr_noisy += psnr(s.f, s.u_gt, peak);
    psnr_out += psnr(forward(s.f, r.model), s.u_gt, peak);
  }
  psnr_noisy /= test.size();
  psnr_out /= test.size();
  const double gain = psnr_out - psnr_noisy;
  const double ratio = r.final_loss / r.initial_loss;
  const double t = seconds_since(start);
  std::ostringstream s;
  s << "held-out PSNR " << psnr_noisy << " -> " << psnr_out << " dB (gain " << gain << " >= 3), loss ratio "
    << ratio << " (< 0.5), " << r.iterations << " iterations [" << to_string(r.status) << "], " << t
    << " s (< 1800 s)";
  return {gain >= 3.0 && ratio < 0.5 && t < 1800.0, s.str()};
}

// 5. Sampler moments at several means.
Outcome sampler_statistics() {
  const auto start = Clock::now();
  const int n = 100000;
  double worst = 0.0;
  for (double mu : {0.5, 1.0, 4.0, 20.0, 40.0}) {
    const Image f = sample_poisson(Image(n, 1, mu), 5005);
    double sum = 0.0;
    for (double v : f.pixels()) sum += v;
    const double mean = sum / n;
    double sq = 0.0;
    for (double v : f.pixels()) sq += (v - mean) * (v - mean);
    const double var = sq / (n - 1);
    worst = std::max(worst, std::abs(mean - mu) / std::sqrt(mu / n));
    worst = std::max(worst, std::abs(var - mu) / std::sqrt((mu + 2 * mu * mu) / n));
  }
  const double t = seconds_since(start);
  std::ostringstream s;
  s << "worst deviation " << worst << " standard errors (< 4), " << t << " s (< 10 s)";
  return {worst < 4.0 && t < 10.0, s.str()};
}

// 6. SSIM and PSNR against independent references.
Outcome metric_oracles() {
  Image board(64, 64);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) board(r, c) = ((r / 8 + c / 8) % 2) ? 255.0 : 0.0;
  Image shifted = board;
  for (auto& v : shifted.pixels()) v += 10.0;
  const Image scene = synthetic_scene(64, 64, 6006);
  const double self = ssim(scene, scene);
  const double diff = std::abs(ssim(shifted, board) - oracle::naive_ssim(shifted, board));
  Image offset = scene;
  for (auto& v : offset.pixels()) v += 5.0;
  const double p = psnr(offset, scene);
  std::ostringstream s;
  s.precision(10);
  s << "ssim(x,x) " << self << " (== 1), |ssim - naive| " << diff << " (< 1e-10), psnr(+5) " << p
    << " dB (34.1514 +- 1e-3)";
  return {self == 1.0 && diff < 1e-10 && std::abs(p - 34.1514) < 1e-3, s.str()};
}

// 7. Timing context only.
Outcome bench_context() {
  cli::BenchOptions opt;
  opt.fallback.stages = 8;
  opt.fallback.filter_size = 5;
  opt.fallback.peak = 40.0;
  opt.sizes = {512};
  opt.runs = 5;
  opt.threads = std::max(1u, std::thread::hardware_concurrency());
  const auto rows = cli::run_bench(opt);
  std::ostringstream s;
  s << "5x5, 8 stages, 512x512 forward: " << rows[0].single_thread_s << " s on 1 thread, "
    << rows[0].multi_thread_s << " s on " << rows[0].threads << " (reference CPU figure 3.07 s)";
  return {true, s.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };

  set_max_threads(1);
  bool ok = true;
  auto run = [&](int id, const char* name, Outcome (*fn)()) {
    if (!wanted(id)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(id, name, o);
    ok = ok && o.pass;
  };
  run(1, "prox oracle", prox_oracle);
  run(2, "adjoint exactness", adjoint_exactness);
  run(3, "gradient correctness", gradient_check);
  run(5, "sampler statistics", sampler_statistics);
  run(6, "metric oracles", metric_oracles);
  run(4, "desk-scale training", training_efficacy);
  if (wanted(7)) {
    try {
      report(7, "run-time context", bench_context(), false);
    } catch (const std::exception& e) {
      report(7, "run-time context", {false, std::string("exception: ") + e.what()}, false);
    }
    std::printf("INFO  #7 full-protocol reproduction (400 patches, 8 stages, peak 40; reference target 28.42 dB / 0.809)"
                " is a long-run target and is not run here\n");
  }
  std::printf("%s\n", ok ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED");
  return ok ? 0 : 1;
}
