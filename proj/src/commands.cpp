#include "trdpd/commands.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "trdpd/image_io.hpp"
#include "trdpd/model_io.hpp"
#include "trdpd/parallel.hpp"
#include "trdpd/poisson.hpp"
#include "trdpd/synthetic.hpp"

namespace trdpd::cli {
namespace {

using nlohmann::json;

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".png";
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << doc.dump(2) << '\n';
}

Image center_crop(const Image& img, int size) {
  return crop(img, (img.height() - size) / 2, (img.width() - size) / 2, size, size);
}

// Deterministic standard normal draws (Box-Muller on raw engine bits).
class Normal {
 public:
  explicit Normal(std::uint64_t seed) : engine_(seed) {}
  double operator()() {
    const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

std::vector<fs::path> list_images(const std::string& source) {
  std::vector<fs::path> out;
  const fs::path p(source);
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
    }
  } else if (fs::is_regular_file(p)) {
    out.push_back(p);
  } else {
    glob_t g{};
    const int rc = ::glob(source.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) {
        const fs::path hit(g.gl_pathv[i]);
        if (fs::is_regular_file(hit)) out.push_back(hit);
      }
    }
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) throw std::runtime_error("glob failed for '" + source + "'");
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw std::runtime_error("no images found at '" + source + "'");
  return out;
}

void run_simulate(const SimulateOptions& opt, std::ostream& log) {
  std::vector<fs::path> files;
  for (const auto& in : opt.inputs) {
    const auto found = list_images(in);
    files.insert(files.end(), found.begin(), found.end());
  }
  const bool single_file = files.size() == 1 && !fs::is_directory(opt.output) && opt.output.has_extension();
  if (!single_file) fs::create_directories(opt.output);

  for (std::size_t n = 0; n < files.size(); ++n) {
    const Image clean = read_image(files[n]);
    const Image scaled = scale_to_peak(clean, opt.peak);
    const std::uint64_t image_seed = derive_seed(opt.seed, n);
    const Image noisy = sample_poisson(scaled, image_seed);
    const fs::path out = single_file ? opt.output : opt.output / (files[n].stem().string() + ".pgm");
    write_pgm(out, noisy);
    fs::path sidecar = out;
    sidecar.replace_extension(".json");
    write_json(sidecar, {{"source", files[n].string()},
                         {"peak", opt.peak},
                         {"seed", opt.seed},
                         {"image_index", n},
                         {"image_seed", image_seed}});
    log << files[n].string() << " -> " << out.string() << '\n';
  }
}

int run_ingest(const IngestOptions& opt, std::ostream& log) {
  if (opt.patch <= 0) throw std::invalid_argument("patch size must be positive");
  const auto files = list_images(opt.dataset);
  fs::create_directories(opt.output);
  std::mt19937_64 engine(opt.seed);
  json entries = json::array();
  int written = 0;
  for (const auto& file : files) {
    if (written >= opt.count) break;
    const Image img = read_image(file);
    if (img.width() < opt.patch || img.height() < opt.patch) {
      log << "warning: skipping " << file.string() << " (" << img.width() << "x" << img.height()
          << " is smaller than the " << opt.patch << " patch)\n";
      continue;
    }
    int row = (img.height() - opt.patch) / 2;
    int col = (img.width() - opt.patch) / 2;
    if (opt.random_crop) {
      row = static_cast<int>(engine() % static_cast<std::uint64_t>(img.height() - opt.patch + 1));
      col = static_cast<int>(engine() % static_cast<std::uint64_t>(img.width() - opt.patch + 1));
    }
    std::ostringstream name;
    name << "patch_" << std::setw(4) << std::setfill('0') << written << ".pgm";
    write_pgm(opt.output / name.str(), crop(img, row, col, opt.patch, opt.patch));
    entries.push_back({{"file", name.str()}, {"source", file.string()}, {"row", row}, {"col", col}});
    ++written;
  }
  write_json(opt.output / "manifest.json", {{"patch", opt.patch},
                                            {"seed", opt.seed},
                                            {"crop", opt.random_crop ? "random" : "center"},
                                            {"patches", entries}});
  log << "wrote " << written << " patches to " << opt.output.string() << '\n';
  return written;
}

std::vector<TrainingSample> build_training_set(const TrainOptions& opt, std::ostream& log) {
  const auto files = list_images(opt.dataset);
  std::vector<TrainingSample> samples;
  for (std::size_t n = 0; n < files.size(); ++n) {
    Image img = read_image(files[n]);
    if (opt.patch > 0) {
      if (img.width() < opt.patch || img.height() < opt.patch) {
        log << "warning: skipping " << files[n].string() << " (smaller than the patch size)\n";
        continue;
      }
      img = center_crop(img, opt.patch);
    }
    TrainingSample s;
    s.u_gt = scale_to_peak(img, opt.config.model.peak);
    s.f = sample_poisson(s.u_gt, derive_seed(opt.config.seed, n));
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw std::runtime_error("training set is empty");
  return samples;
}

TrainResult run_train(const TrainOptions& opt, std::ostream& log) {
  const auto dataset = build_training_set(opt, log);
  TrainConfig config = opt.config;
  if (opt.verbose) {
    config.optimizer.on_iteration = [&log](const LbfgsIteration& it) {
      log << "iter " << std::setw(4) << it.iteration << "  evals " << std::setw(4) << it.evaluations
          << "  loss " << std::setprecision(10) << it.value << "  |g|inf " << std::setprecision(4)
          << it.gradient_norm << "  step " << it.step << std::endl;
    };
  }
  log << "training on " << dataset.size() << " samples, " << config.model.stages << " stages, "
      << config.model.filter_size << "x" << config.model.filter_size << " filters, peak " << config.model.peak
      << '\n';
  TrainResult result = train_joint(dataset, config);
  log << "status " << to_string(result.status) << ", loss " << result.initial_loss << " -> " << result.final_loss
      << " after " << result.iterations << " iterations\n";
  if (!opt.output.empty()) save_model(opt.output, result.model);
  return result;
}

void run_denoise(const DenoiseOptions& opt, std::ostream& log) {
  const DiffusionModel model = load_model(opt.model);
  const Image noisy = read_image(opt.input);
  Image restored = forward(noisy, model);
  if (!opt.raw) {
    for (double& v : restored.pixels()) v *= 255.0 / model.training_peak();
  }
  write_pgm(opt.output, restored);
  log << opt.input.string() << " -> " << opt.output.string() << '\n';
}

EvalReport run_eval(const EvalOptions& opt) {
  std::vector<DiffusionModel> models;
  for (const auto& path : opt.models) models.push_back(load_model(path));
  std::vector<NamedImage> images;
  for (const auto& file : list_images(opt.dataset)) images.push_back({file.stem().string(), read_image(file)});
  return evaluate_set(models, images, opt.peaks, opt.seed);
}

GradcheckOptions default_gradcheck_options() {
  GradcheckOptions opt;
  opt.model.peak = 4.0;
  opt.model.stages = 2;
  opt.model.filter_size = 3;
  return opt;
}

GradientCheckReport run_gradcheck(const GradcheckOptions& opt) {
  DiffusionModel model = DiffusionModel::initialize(opt.model);
  // Break the symmetry of the initialization so every parameter matters.
  Normal normal(derive_seed(opt.seed, 1));
  const double weight_scale = [&] {
    double m = 0.0;
    for (double w : model.stages().front().influence_weights.front()) m = std::max(m, std::abs(w));
    return m > 0.0 ? m : 1.0;
  }();
  for (auto& s : model.stages()) {
    s.beta += 0.5 * normal();
    for (auto& c : s.filter_coeffs)
      for (double& v : c) v += opt.perturbation * normal();
    for (auto& w : s.influence_weights)
      for (double& v : w) v += opt.perturbation * weight_scale * normal();
  }

  TrainingSample sample;
  sample.u_gt = scale_to_peak(synthetic_scene(opt.size, opt.size, opt.seed), opt.model.peak);
  sample.f = sample_poisson(sample.u_gt, derive_seed(opt.seed, 2));
  return finite_difference_check(model, sample, opt.h);
}

void print_gradcheck(std::ostream& out, const GradientCheckReport& report, double tolerance) {
  out << "stage  group       count  max|grad|      max|err|       rel.err\n";
  for (const auto& g : report.groups) {
    out << std::setw(5) << g.stage << "  " << std::left << std::setw(10) << g.name << std::right << std::setw(7)
        << g.count << "  " << std::scientific << std::setprecision(6) << g.max_abs_gradient << "  "
        << g.max_abs_error << "  " << g.rel_error << (g.rel_error < tolerance ? "" : "  FAIL") << '\n'
        << std::defaultfloat;
  }
  out << "max relative error " << std::scientific << report.max_rel_error << std::defaultfloat
      << (report.max_rel_error < tolerance ? " (ok)" : " (exceeds tolerance)") << '\n';
}

std::vector<BenchRow> run_bench(const BenchOptions& opt) {
  const DiffusionModel model =
      opt.model.empty() ? DiffusionModel::initialize(opt.fallback) : load_model(opt.model);
  const unsigned previous = max_threads();
  const unsigned multi = opt.threads > 0 ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  std::vector<BenchRow> rows;
  for (int size : opt.sizes) {
    const Image clean = scale_to_peak(synthetic_scene(size, size, opt.seed), model.training_peak());
    const Image noisy = sample_poisson(clean, derive_seed(opt.seed, static_cast<std::uint64_t>(size)));
    auto median_time = [&](unsigned threads) {
      set_max_threads(threads);
      std::vector<double> times;
      for (int run = 0; run < std::max(1, opt.runs); ++run) {
        const auto start = std::chrono::steady_clock::now();
        const Image out = forward(noisy, model);
        const auto stop = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(stop - start).count());
      }
      std::sort(times.begin(), times.end());
      return times[times.size() / 2];
    };
    BenchRow row;
    row.size = size;
    row.threads = multi;
    row.single_thread_s = median_time(1);
    row.multi_thread_s = median_time(multi);
    rows.push_back(row);
  }
  set_max_threads(previous);
  return rows;
}

void print_bench(std::ostream& out, const std::vector<BenchRow>& rows, const BenchOptions& opt) {
  out << "size        1 thread [s]   " << (rows.empty() ? 1u : rows.front().threads)
      << " threads [s]   (median of " << opt.runs << " runs, forward only)\n";
  for (const auto& r : rows) {
    out << std::setw(4) << r.size << "x" << std::left << std::setw(6) << r.size << std::right << std::fixed
        << std::setprecision(4) << std::setw(14) << r.single_thread_s << std::setw(15) << r.multi_thread_s << '\n'
        << std::defaultfloat;
  }
}

}  // namespace trdpd::cli
