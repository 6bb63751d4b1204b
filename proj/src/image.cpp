#include "trdpd/image.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "trdpd/parallel.hpp"

namespace trdpd {
namespace {

constexpr std::size_t kParallelMinPixels = 1u << 14;

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("image dimensions must be positive, got " + std::to_string(width) +
                                "x" + std::to_string(height));
  }
  // Padding adds a few pixels per side and we index with int.
  const long long limit = std::numeric_limits<int>::max() / 4;
  if (static_cast<long long>(width) * height > limit) {
    throw std::overflow_error("image dimensions overflow: " + std::to_string(width) + "x" +
                              std::to_string(height));
  }
}

void check_kernel(const Kernel& k) {
  if (k.size() <= 0 || k.size() % 2 == 0) {
    throw std::invalid_argument("kernel size must be odd and positive");
  }
}

void for_rows(int rows, std::size_t pixels, const std::function<void(std::size_t)>& fn) {
  if (pixels < kParallelMinPixels) {
    for (int r = 0; r < rows; ++r) fn(static_cast<std::size_t>(r));
  } else {
    parallel_for(static_cast<std::size_t>(rows), fn);
  }
}

// Image extended by `pad` pixels of half-sample symmetric padding per side.
struct Padded {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  const double* row_ptr(int row) const { return data.data() + static_cast<std::size_t>(row) * width; }
};

Padded pad_symmetric(const Image& x, int pad) {
  Padded p;
  p.width = x.width() + 2 * pad;
  p.height = x.height() + 2 * pad;
  p.data.resize(static_cast<std::size_t>(p.width) * p.height);
  std::vector<int> cols(p.width);
  for (int c = 0; c < p.width; ++c) cols[c] = reflect_index(c - pad, x.width());
  for (int r = 0; r < p.height; ++r) {
    const int src = reflect_index(r - pad, x.height());
    double* dst = p.data.data() + static_cast<std::size_t>(r) * p.width;
    for (int c = 0; c < p.width; ++c) dst[c] = x(src, cols[c]);
  }
  return p;
}

}  // namespace

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("image data length does not match its dimensions");
  }
}

Kernel::Kernel(int size, double fill) : size_(size) {
  if (size <= 0 || size % 2 == 0) throw std::invalid_argument("kernel size must be odd and positive");
  coeffs_.assign(static_cast<std::size_t>(size) * size, fill);
}

Kernel::Kernel(int size, std::vector<double> coeffs) : size_(size), coeffs_(std::move(coeffs)) {
  if (size <= 0 || size % 2 == 0) throw std::invalid_argument("kernel size must be odd and positive");
  if (coeffs_.size() != static_cast<std::size_t>(size) * size) {
    throw std::invalid_argument("kernel coefficient count does not match its size");
  }
}

Kernel Kernel::delta(int size) {
  Kernel k(size);
  k(size / 2, size / 2) = 1.0;
  return k;
}

Kernel rotate180(const Kernel& k) {
  Kernel out(k.size());
  const int m = k.size();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out(i, j) = k(m - 1 - i, m - 1 - j);
  return out;
}

int reflect_index(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

Image conv2d_sym(const Image& x, const Kernel& k) {
  check_dims(x.width(), x.height());
  check_kernel(k);
  const int m = k.size();
  const int h = k.radius();
  const Padded xp = pad_symmetric(x, h);
  Image y(x.width(), x.height());
  const int w = x.width();

  // y(r,c) = sum_{a,b} k(a,b) * xpad(r + 2h - a, c + 2h - b)
  for_rows(x.height(), x.size(), [&](std::size_t row) {
    const int r = static_cast<int>(row);
    double* out = &y(r, 0);
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int a = 0; a < m; ++a) {
        const double* src = xp.row_ptr(r + 2 * h - a) + c + 2 * h;
        const double* kr = k.coeffs().data() + static_cast<std::size_t>(a) * m;
        for (int b = 0; b < m; ++b) acc += kr[b] * src[-b];
      }
      out[c] = acc;
    }
  });
  return y;
}

Image conv2d_adjoint(const Image& y, const Kernel& k) {
  check_dims(y.width(), y.height());
  check_kernel(k);
  const int m = k.size();
  const int h = k.radius();
  const int w = y.width();
  const int ht = y.height();

  // y zero-extended by 2h per side, so that the scatter onto the padded
  // domain can be written as a gather: g(p,q) = sum k(a,b) * yz(p+a, q+b).
  const int zw = w + 4 * h;
  const int zh = ht + 4 * h;
  std::vector<double> yz(static_cast<std::size_t>(zw) * zh, 0.0);
  for (int r = 0; r < ht; ++r)
    for (int c = 0; c < w; ++c) yz[static_cast<std::size_t>(r + 2 * h) * zw + c + 2 * h] = y(r, c);

  const int pw = w + 2 * h;
  const int ph = ht + 2 * h;
  std::vector<double> g(static_cast<std::size_t>(pw) * ph);
  for_rows(ph, static_cast<std::size_t>(pw) * ph, [&](std::size_t row) {
    const int p = static_cast<int>(row);
    double* out = g.data() + static_cast<std::size_t>(p) * pw;
    for (int q = 0; q < pw; ++q) {
      double acc = 0.0;
      for (int a = 0; a < m; ++a) {
        const double* src = yz.data() + static_cast<std::size_t>(p + a) * zw + q;
        const double* kr = k.coeffs().data() + static_cast<std::size_t>(a) * m;
        for (int b = 0; b < m; ++b) acc += kr[b] * src[b];
      }
      out[q] = acc;
    }
  });

  // Fold the padded domain back: padded index p holds a copy of pixel
  // reflect(p - h). Sources are summed in increasing padded index.
  auto sources = [h](int n, int padded) {
    std::vector<std::vector<int>> lists(n);
    for (int p = 0; p < padded; ++p) lists[reflect_index(p - h, n)].push_back(p);
    return lists;
  };
  const auto row_src = sources(ht, ph);
  const auto col_src = sources(w, pw);

  std::vector<double> folded_cols(static_cast<std::size_t>(ph) * w);
  for (int p = 0; p < ph; ++p) {
    const double* gr = g.data() + static_cast<std::size_t>(p) * pw;
    double* out = folded_cols.data() + static_cast<std::size_t>(p) * w;
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int q : col_src[c]) acc += gr[q];
      out[c] = acc;
    }
  }

  Image x(w, ht);
  for (int r = 0; r < ht; ++r) {
    double* out = &x(r, 0);
    for (int p : row_src[r]) {
      const double* src = folded_cols.data() + static_cast<std::size_t>(p) * w;
      for (int c = 0; c < w; ++c) out[c] += src[c];
    }
  }
  return x;
}

Kernel conv2d_kernel_grad(const Image& x, const Image& weight, int kernel_size) {
  if (!x.same_shape(weight)) throw std::invalid_argument("conv2d_kernel_grad: shape mismatch");
  Kernel grad(kernel_size);
  const int m = kernel_size;
  const int h = grad.radius();
  const Padded xp = pad_symmetric(x, h);
  const int w = x.width();
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      double acc = 0.0;
      for (int r = 0; r < x.height(); ++r) {
        const double* src = xp.row_ptr(r + 2 * h - a) + 2 * h - b;
        const double* wr = weight.pixels().data() + static_cast<std::size_t>(r) * w;
        for (int c = 0; c < w; ++c) acc += wr[c] * src[c];
      }
      grad(a, b) = acc;
    }
  }
  return grad;
}

double dot(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace trdpd
