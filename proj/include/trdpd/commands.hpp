#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "trdpd/metrics.hpp"
#include "trdpd/training.hpp"

namespace trdpd::cli {

namespace fs = std::filesystem;

/// Expands a file, a directory (every .pgm/.png inside, sorted) or a glob
/// pattern into a sorted list of image paths.
std::vector<fs::path> list_images(const std::string& source);

struct SimulateOptions {
  std::vector<std::string> inputs;
  fs::path output;  // directory, or a file when there is a single input
  double peak = 1.0;
  std::uint64_t seed = 0;
};

/// Scales each image to the peak and writes Poisson counts as PGM, plus a
/// JSON sidecar recording peak and seed.
void run_simulate(const SimulateOptions& opt, std::ostream& log);

struct IngestOptions {
  std::string dataset;
  fs::path output;
  int patch = 180;
  int count = 400;
  std::uint64_t seed = 0;
  bool random_crop = true;
};

/// Crops one patch per image (seeded-random or centered) and writes the
/// patches with a manifest.json. Undersized images are skipped.
int run_ingest(const IngestOptions& opt, std::ostream& log);

struct TrainOptions {
  TrainConfig config;
  std::string dataset;  // file, directory or glob of clean images
  int patch = 180;      // center crop applied to larger images; 0 keeps full size
  fs::path output;
  bool verbose = true;
};

std::vector<TrainingSample> build_training_set(const TrainOptions& opt, std::ostream& log);
TrainResult run_train(const TrainOptions& opt, std::ostream& log);

struct DenoiseOptions {
  fs::path model;
  fs::path input;   // PGM/PNG of Poisson counts
  fs::path output;
  bool raw = false;  // write intensities as-is instead of rescaling to 255
};

void run_denoise(const DenoiseOptions& opt, std::ostream& log);

struct EvalOptions {
  std::vector<fs::path> models;
  std::string dataset;
  std::vector<double> peaks;
  std::uint64_t seed = 0;
};

EvalReport run_eval(const EvalOptions& opt);

struct GradcheckOptions {
  ModelConfig model;  // defaults: 3x3 filters, 2 stages
  int size = 32;
  double h = 1e-3;
  double tolerance = 1e-4;
  double perturbation = 0.05;
  std::uint64_t seed = 0;
};

GradcheckOptions default_gradcheck_options();
/// Builds a perturbed model and one synthetic sample, then compares the
/// analytic gradient with central differences.
GradientCheckReport run_gradcheck(const GradcheckOptions& opt);
void print_gradcheck(std::ostream& out, const GradientCheckReport& report, double tolerance);

struct BenchOptions {
  fs::path model;       // empty: an initialized model built from `fallback`
  ModelConfig fallback;
  std::vector<int> sizes{256, 512};
  int runs = 5;
  unsigned threads = 0;  // 0: hardware concurrency for the multi-threaded column
  std::uint64_t seed = 0;
};

struct BenchRow {
  int size = 0;
  double single_thread_s = 0.0;
  double multi_thread_s = 0.0;
  unsigned threads = 1;
};

/// Median wall-clock time of forward() over `runs` repetitions, image I/O
/// excluded.
std::vector<BenchRow> run_bench(const BenchOptions& opt);
void print_bench(std::ostream& out, const std::vector<BenchRow>& rows, const BenchOptions& opt);

}  // namespace trdpd::cli
