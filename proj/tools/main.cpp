// Command-line front end: simulate, ingest, train, denoise, eval, gradcheck, bench.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "trdpd/commands.hpp"
#include "trdpd/parallel.hpp"

namespace {

using namespace trdpd;
using namespace trdpd::cli;

void add_model_options(CLI::App* cmd, ModelConfig& m) {
  cmd->add_option("--peak", m.peak, "Peak intensity (noise level) the model is trained for")->check(CLI::PositiveNumber);
  cmd->add_option("--stages", m.stages, "Number of diffusion stages T")->check(CLI::PositiveNumber);
  cmd->add_option("--filter-size", m.filter_size, "Filter size m (odd)")->check(CLI::PositiveNumber);
  cmd->add_option("--filters", m.num_filters, "Filters per stage (0: m*m-1)");
  cmd->add_option("--rbf-count", m.rbf_count, "Gaussian RBF centers per influence function");
  cmd->add_option("--rbf-range", m.rbf_range, "RBF centers span [-R, R] (0: 310*peak/255)");
  cmd->add_option("--rbf-width", m.rbf_width, "RBF width gamma (0: center spacing)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trained reaction-diffusion denoiser for Poisson noise"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0: all cores)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Scale images to a peak and add Poisson noise");
  simulate->add_option("inputs", sim.inputs, "Image files, directories or globs")->required();
  simulate->add_option("-o,--output", sim.output, "Output directory (or file for a single input)")->required();
  simulate->add_option("--peak", sim.peak, "Peak intensity")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Noise seed");

  IngestOptions ingest_opt;
  std::string crop_mode = "random";
  auto* ingest = app.add_subcommand("ingest", "Crop one training patch per image");
  ingest->add_option("dataset", ingest_opt.dataset, "Directory or glob of grayscale images")->required();
  ingest->add_option("-o,--output", ingest_opt.output, "Output directory")->required();
  ingest->add_option("--patch", ingest_opt.patch, "Patch side length")->check(CLI::PositiveNumber);
  ingest->add_option("--count", ingest_opt.count, "Maximum number of patches")->check(CLI::PositiveNumber);
  ingest->add_option("--seed", ingest_opt.seed, "Crop position seed");
  ingest->add_option("--crop", crop_mode, "Crop placement")->check(CLI::IsMember({"random", "center"}));

  TrainOptions train_opt;
  train_opt.config.model.peak = 4.0;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Jointly train all stages with L-BFGS");
  train->set_config("--config", "", "key = value file providing any of the options below");
  train->add_option("--dataset", train_opt.dataset, "File, directory or glob of clean training images")->required();
  train->add_option("-o,--output", train_opt.output, "Model file to write")->required();
  train->add_option("--patch", train_opt.patch, "Center-crop size (0: full images)");
  train->add_option("--seed", train_opt.config.seed, "Noise seed for the training set");
  add_model_options(train, train_opt.config.model);
  train->add_option("--max-iterations", train_opt.config.optimizer.max_iterations, "L-BFGS iteration limit");
  train->add_option("--history", train_opt.config.optimizer.history, "L-BFGS memory");
  train->add_option("--c1", train_opt.config.optimizer.c1, "Sufficient-decrease constant");
  train->add_option("--c2", train_opt.config.optimizer.c2, "Curvature constant");
  train->add_option("--gradient-tolerance", train_opt.config.optimizer.gradient_tolerance, "Relative gradient tolerance");
  train->add_flag("--quiet", quiet, "Suppress per-iteration progress");

  DenoiseOptions den;
  auto* denoise = app.add_subcommand("denoise", "Restore a Poisson-noisy image");
  denoise->add_option("-m,--model", den.model, "Model file")->required()->check(CLI::ExistingFile);
  denoise->add_option("input", den.input, "Noisy counts image (PGM/PNG)")->required()->check(CLI::ExistingFile);
  denoise->add_option("-o,--output", den.output, "Output PGM")->required();
  denoise->add_flag("--raw", den.raw, "Write intensities without rescaling to 255");

  EvalOptions ev;
  std::string csv_path;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM of trained models over an image set");
  eval->add_option("-m,--model", ev.models, "Model files (one per peak)")->required();
  eval->add_option("dataset", ev.dataset, "Directory or glob of clean test images")->required();
  eval->add_option("--peaks", ev.peaks, "Peaks to evaluate")->required();
  eval->add_option("--seed", ev.seed, "Noise seed");
  eval->add_option("--csv", csv_path, "CSV output file (default: stdout)");

  GradcheckOptions gc = default_gradcheck_options();
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  gradcheck->set_config("--config", "", "key = value file providing any of the options below");
  add_model_options(gradcheck, gc.model);
  gradcheck->add_option("--size", gc.size, "Side of the synthetic test image");
  gradcheck->add_option("--h", gc.h, "Relative finite-difference step");
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum accepted relative error");
  gradcheck->add_option("--seed", gc.seed, "Seed for the perturbation and the sample");

  BenchOptions bench_opt;
  bench_opt.fallback.stages = 8;
  bench_opt.fallback.filter_size = 5;
  bench_opt.fallback.peak = 40.0;
  auto* bench = app.add_subcommand("bench", "Time forward() on synthetic images");
  bench->add_option("-m,--model", bench_opt.model, "Model file (default: initialized model from the options)");
  add_model_options(bench, bench_opt.fallback);
  bench->add_option("--sizes", bench_opt.sizes, "Square image sizes");
  bench->add_option("--runs", bench_opt.runs, "Repetitions per measurement");
  bench->add_option("--bench-threads", bench_opt.threads, "Threads for the multi-threaded column (0: all cores)");

  CLI11_PARSE(app, argc, argv);
  set_max_threads(threads);

  try {
    if (*simulate) {
      run_simulate(sim, std::cout);
    } else if (*ingest) {
      ingest_opt.random_crop = crop_mode == "random";
      run_ingest(ingest_opt, std::cerr);
    } else if (*train) {
      train_opt.verbose = !quiet;
      run_train(train_opt, std::cerr);
    } else if (*denoise) {
      run_denoise(den, std::cerr);
    } else if (*eval) {
      const EvalReport report = run_eval(ev);
      if (csv_path.empty()) {
        write_csv(std::cout, report);
      } else {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error(csv_path + ": cannot open for writing");
        write_csv(out, report);
      }
    } else if (*gradcheck) {
      const GradientCheckReport report = run_gradcheck(gc);
      print_gradcheck(std::cout, report, gc.tolerance);
      return report.max_rel_error < gc.tolerance ? 0 : 2;
    } else if (*bench) {
      const auto rows = run_bench(bench_opt);
      print_bench(std::cout, rows, bench_opt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
