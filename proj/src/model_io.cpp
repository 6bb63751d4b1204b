#include "trdpd/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

namespace trdpd {
namespace {

constexpr char kMagic[6] = {'T', 'R', 'D', 'P', 'D', '\0'};

class Writer {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("model file truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_model(const DiffusionModel& model) {
  model.validate();
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  w.f64(model.training_peak());
  w.u32(static_cast<std::uint32_t>(model.num_stages()));
  w.u32(static_cast<std::uint32_t>(model.filter_size()));
  w.u32(static_cast<std::uint32_t>(model.num_filters()));
  w.u32(static_cast<std::uint32_t>(model.rbf().count));
  w.f64(model.rbf().range);
  w.f64(model.rbf().width);
  for (const auto& s : model.stages()) {
    w.f64(s.beta);
    for (const auto& c : s.filter_coeffs)
      for (double v : c) w.f64(v);
    for (const auto& iw : s.influence_weights)
      for (double v : iw) w.f64(v);
  }
  const std::uint32_t crc = crc32(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

DiffusionModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 4) throw std::runtime_error("model file truncated");
  const auto payload = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (tail.u32() != crc32(payload)) throw std::runtime_error("model file CRC mismatch");

  Reader r(payload);
  char magic[sizeof kMagic];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw std::runtime_error("not a TRDPD model file");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw std::runtime_error("unsupported model format version " + std::to_string(version));
  }
  const double peak = r.f64();
  const std::uint32_t stages = r.u32();
  const std::uint32_t m = r.u32();
  const std::uint32_t nk = r.u32();
  RbfGrid grid;
  grid.count = static_cast<int>(r.u32());
  grid.range = r.f64();
  grid.width = r.f64();
  if (m == 0 || m % 2 == 0 || m > 63) throw std::runtime_error("model file: invalid filter size");
  const std::size_t atoms = static_cast<std::size_t>(m) * m - 1;
  if (nk > atoms) throw std::runtime_error("model file: too many filters for the filter size");
  if (grid.count < 1 || grid.count > (1 << 20)) throw std::runtime_error("model file: invalid RBF count");
  const std::size_t per_stage = 1 + nk * (atoms + static_cast<std::size_t>(grid.count));
  if (stages == 0 || r.remaining() != 8 * per_stage * stages) {
    throw std::runtime_error("model file: declared sizes do not match the payload");
  }

  std::vector<StageCoeffs> coeffs(stages);
  for (auto& s : coeffs) {
    s.beta = r.f64();
    s.filter_coeffs.assign(nk, std::vector<double>(atoms));
    for (auto& c : s.filter_coeffs)
      for (double& v : c) v = r.f64();
    s.influence_weights.assign(nk, std::vector<double>(static_cast<std::size_t>(grid.count)));
    for (auto& iw : s.influence_weights)
      for (double& v : iw) v = r.f64();
  }
  return DiffusionModel(static_cast<int>(m), peak, grid, std::move(coeffs));
}

void save_model(const std::filesystem::path& path, const DiffusionModel& model) {
  const std::vector<std::uint8_t> bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

DiffusionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return decode_model(bytes);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace trdpd
