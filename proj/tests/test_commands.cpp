#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "trdpd/commands.hpp"
#include "trdpd/image_io.hpp"
#include "trdpd/metrics.hpp"
#include "trdpd/model_io.hpp"
#include "trdpd/poisson.hpp"
#include "trdpd/synthetic.hpp"

using namespace trdpd;
using namespace trdpd::cli;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Image quantized_scene(int w, int h, std::uint64_t seed) {
  Image img = synthetic_scene(w, h, seed);
  for (auto& v : img.pixels()) v = std::floor(v + 0.5);
  return img;
}

void write_scenes(const fs::path& dir, int n, int w, int h) {
  fs::create_directories(dir);
  for (int i = 0; i < n; ++i) write_pgm(dir / ("img" + std::to_string(i) + ".pgm"), quantized_scene(w, h, 200 + i));
}

}  // namespace

TEST_CASE("list_images expands files, directories and globs in sorted order") {
  TempDir tmp("trdpd_test_list");
  write_scenes(tmp.path, 3, 8, 8);
  std::ofstream(tmp.path / "notes.txt") << "x";
  const auto dir = list_images(tmp.path.string());
  REQUIRE(dir.size() == 3);
  CHECK(dir[0].filename() == "img0.pgm");
  CHECK(dir[2].filename() == "img2.pgm");
  CHECK(list_images((tmp.path / "img1.pgm").string()).size() == 1);
  CHECK(list_images((tmp.path / "img[01].pgm").string()).size() == 2);
  CHECK_THROWS(list_images((tmp.path / "nothing*.pgm").string()));
}

TEST_CASE("simulate is deterministic and records peak and seed") {
  TempDir tmp("trdpd_test_simulate");
  write_scenes(tmp.path / "in", 2, 32, 24);
  std::ostringstream log;
  SimulateOptions opt{{(tmp.path / "in").string()}, tmp.path / "a", 1.0, 42};
  run_simulate(opt, log);
  opt.output = tmp.path / "b";
  run_simulate(opt, log);
  for (const char* name : {"img0.pgm", "img1.pgm", "img0.json"}) {
    CHECK(slurp(tmp.path / "a" / name) == slurp(tmp.path / "b" / name));
  }
  const auto side = nlohmann::json::parse(slurp(tmp.path / "a" / "img1.json"));
  CHECK(side["peak"] == 1.0);
  CHECK(side["seed"] == 42);
  CHECK(side["image_index"] == 1);
  // peak 1: counts are small integers
  const Image noisy = read_pgm(tmp.path / "a" / "img0.pgm");
  double mx = 0.0;
  for (double v : noisy.pixels()) mx = std::max(mx, v);
  CHECK(mx >= 1.0);
  CHECK(mx <= 10.0);
  opt.seed = 43;
  opt.output = tmp.path / "c";
  run_simulate(opt, log);
  CHECK(slurp(tmp.path / "a" / "img0.pgm") != slurp(tmp.path / "c" / "img0.pgm"));
}

TEST_CASE("simulate with peak equal to the maximum corrupts a flat field with Poisson noise only") {
  TempDir tmp("trdpd_test_simulate_flat");
  write_pgm(tmp.path / "flat.pgm", Image(64, 64, 30.0));
  std::ostringstream log;
  run_simulate({{(tmp.path / "flat.pgm").string()}, tmp.path / "out.pgm", 30.0, 1}, log);
  const Image noisy = read_pgm(tmp.path / "out.pgm");
  CHECK(noisy == sample_poisson(Image(64, 64, 30.0), derive_seed(1, 0)));
  CHECK(fs::exists(tmp.path / "out.json"));
}

TEST_CASE("ingest crops, skips small images and writes a reproducible manifest") {
  TempDir tmp("trdpd_test_ingest");
  write_scenes(tmp.path / "data", 3, 40, 30);
  write_pgm(tmp.path / "data" / "small.pgm", Image(10, 10, 5.0));
  std::ostringstream log;
  IngestOptions opt{(tmp.path / "data").string(), tmp.path / "p1", 20, 400, 9, true};
  CHECK(run_ingest(opt, log) == 3);
  CHECK(log.str().find("skipping") != std::string::npos);
  opt.output = tmp.path / "p2";
  run_ingest(opt, log);
  CHECK(slurp(tmp.path / "p1" / "manifest.json") == slurp(tmp.path / "p2" / "manifest.json"));
  CHECK(read_pgm(tmp.path / "p1" / "patch_0002.pgm").width() == 20);

  const auto manifest = nlohmann::json::parse(slurp(tmp.path / "p1" / "manifest.json"));
  CHECK(manifest["seed"] == 9);
  CHECK(manifest["patches"].size() == 3);

  opt.count = 2;
  opt.output = tmp.path / "p3";
  CHECK(run_ingest(opt, log) == 2);

  // patch equal to the image size is the identity crop
  TempDir one("trdpd_test_ingest_identity");
  const Image img = quantized_scene(24, 24, 5);
  write_pgm(one.path / "x.pgm", img);
  IngestOptions id{(one.path / "x.pgm").string(), one.path / "out", 24, 1, 3, true};
  CHECK(run_ingest(id, log) == 1);
  CHECK(read_pgm(one.path / "out" / "patch_0000.pgm") == img);
  id.random_crop = false;
  id.output = one.path / "out_center";
  run_ingest(id, log);
  CHECK(read_pgm(one.path / "out_center" / "patch_0000.pgm") == img);
}

TEST_CASE("train writes a loadable model; denoise with a zero-diffusion model keeps the noisy PSNR") {
  TempDir tmp("trdpd_test_train");
  write_scenes(tmp.path / "data", 2, 24, 24);
  std::ostringstream log;
  TrainOptions topt;
  topt.dataset = (tmp.path / "data").string();
  topt.patch = 16;
  topt.output = tmp.path / "m.trdpd";
  topt.verbose = false;
  topt.config.model.peak = 4.0;
  topt.config.model.stages = 1;
  topt.config.model.filter_size = 3;
  topt.config.optimizer.max_iterations = 3;
  const TrainResult r = run_train(topt, log);
  CHECK(r.final_loss <= r.initial_loss);
  CHECK(load_model(topt.output).parameters() == r.model.parameters());

  ModelConfig zero_cfg;
  zero_cfg.peak = 40.0;
  zero_cfg.stages = 1;
  zero_cfg.filter_size = 3;
  DiffusionModel zero = DiffusionModel::initialize(zero_cfg);
  for (auto& w : zero.stages()[0].influence_weights) std::fill(w.begin(), w.end(), 0.0);
  save_model(tmp.path / "zero.trdpd", zero);

  Image clean = quantized_scene(48, 48, 17);
  for (auto& v : clean.pixels()) v = 20.0 + 0.9 * v;
  const Image gt = scale_to_peak(clean, 40.0);
  const Image counts = sample_poisson(gt, 3);
  write_pgm(tmp.path / "noisy.pgm", counts);
  run_denoise({tmp.path / "zero.trdpd", tmp.path / "noisy.pgm", tmp.path / "raw.pgm", true}, log);
  const Image raw = read_pgm(tmp.path / "raw.pgm");
  CHECK(std::abs(psnr(raw, gt, 40.0) - psnr(counts, gt, 40.0)) < 0.5);

  // Default output is rescaled to 8 bits, which clips counts above the peak;
  // compare against the noisy input quantized the same way.
  run_denoise({tmp.path / "zero.trdpd", tmp.path / "noisy.pgm", tmp.path / "out.pgm", false}, log);
  const Image restored = read_pgm(tmp.path / "out.pgm");
  Image noisy255 = counts, gt255 = gt;
  for (auto& v : noisy255.pixels()) v = std::min(255.0, std::floor(v * 255.0 / 40.0 + 0.5));
  for (auto& v : gt255.pixels()) v *= 255.0 / 40.0;
  CHECK(std::abs(psnr(restored, gt255) - psnr(noisy255, gt255)) < 0.5);
}

TEST_CASE("eval produces identical CSVs on repeated runs and rejects missing peaks") {
  TempDir tmp("trdpd_test_eval");
  write_scenes(tmp.path / "data", 2, 20, 20);
  ModelConfig cfg;
  cfg.peak = 4.0;
  cfg.stages = 1;
  cfg.filter_size = 3;
  save_model(tmp.path / "m4.trdpd", DiffusionModel::initialize(cfg));
  EvalOptions opt{{tmp.path / "m4.trdpd"}, (tmp.path / "data").string(), {4.0}, 5};
  std::ostringstream a, b;
  write_csv(a, run_eval(opt));
  write_csv(b, run_eval(opt));
  CHECK(a.str() == b.str());
  CHECK(a.str().find("img1") != std::string::npos);
  opt.peaks = {4.0, 1.0};
  CHECK_THROWS(run_eval(opt));
}

TEST_CASE("gradcheck command on its default configuration") {
  GradcheckOptions opt = default_gradcheck_options();
  CHECK(opt.model.stages == 2);
  CHECK(opt.model.filter_size == 3);
  CHECK(opt.size == 32);
  const GradientCheckReport report = run_gradcheck(opt);
  CHECK(report.groups.size() == 6);
  CHECK(report.max_rel_error < 1e-4);
  std::ostringstream out;
  print_gradcheck(out, report, opt.tolerance);
  CHECK(out.str().find("(ok)") != std::string::npos);
}

TEST_CASE("bench reports one row per size") {
  BenchOptions opt;
  opt.fallback.stages = 1;
  opt.fallback.filter_size = 3;
  opt.fallback.peak = 4.0;
  opt.sizes = {32, 48};
  opt.runs = 2;
  opt.threads = 2;
  const auto rows = run_bench(opt);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].size == 48);
  CHECK(rows[0].single_thread_s > 0.0);
  CHECK(rows[0].threads == 2);
}
