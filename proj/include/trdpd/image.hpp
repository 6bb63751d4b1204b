#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace trdpd {

/// Single-channel image stored row-major in double precision.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  double operator()(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Square, odd-sized, center-anchored filter kernel (row-major).
class Kernel {
 public:
  Kernel() = default;
  explicit Kernel(int size, double fill = 0.0);
  Kernel(int size, std::vector<double> coeffs);

  static Kernel delta(int size);

  int size() const { return size_; }
  int radius() const { return size_ / 2; }
  double& operator()(int row, int col) { return coeffs_[static_cast<std::size_t>(row) * size_ + col]; }
  double operator()(int row, int col) const { return coeffs_[static_cast<std::size_t>(row) * size_ + col]; }
  std::span<double> coeffs() { return coeffs_; }
  std::span<const double> coeffs() const { return coeffs_; }

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  int size_ = 0;
  std::vector<double> coeffs_;
};

Kernel rotate180(const Kernel& k);

/// Maps an arbitrary index onto [0, n) by half-sample symmetric reflection
/// (index -1 maps to 0, index n maps to n-1), repeating as often as needed.
int reflect_index(int i, int n);

/// True convolution of `x` with `k` over the image extended by symmetric
/// padding of radius (m-1)/2. Output has the same shape as `x`.
Image conv2d_sym(const Image& x, const Kernel& k);

/// Exact transpose of conv2d_sym(., k): the reflected contributions that
/// land in the padding are folded back onto the pixels they were copied from.
Image conv2d_adjoint(const Image& y, const Kernel& k);

/// Gradient of <conv2d_sym(x, k), weight> with respect to the coefficients
/// of k, for a kernel of the given size.
Kernel conv2d_kernel_grad(const Image& x, const Image& weight, int kernel_size);

double dot(const Image& a, const Image& b);

}  // namespace trdpd
