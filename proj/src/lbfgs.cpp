#include "trdpd/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace trdpd {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

struct Point {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative along the search direction
  std::vector<double> grad;
};

class Evaluator {
 public:
  Evaluator(const Objective& objective, std::size_t n) : objective_(objective), trial_(n) {}

  double operator()(std::span<const double> x, std::span<double> grad) {
    ++count_;
    const double f = objective_(x, grad);
    if (!std::isfinite(f)) throw_non_finite("objective value", f);
    for (double g : grad) {
      if (!std::isfinite(g)) throw_non_finite("gradient component", g);
    }
    return f;
  }

  Point probe(std::span<const double> x, std::span<const double> dir, double alpha) {
    for (std::size_t i = 0; i < x.size(); ++i) trial_[i] = x[i] + alpha * dir[i];
    Point p;
    p.alpha = alpha;
    p.grad.resize(x.size());
    p.value = (*this)(trial_, p.grad);
    p.slope = dot(p.grad, dir);
    return p;
  }

  int count() const { return count_; }

 private:
  [[noreturn]] void throw_non_finite(const char* what, double v) const {
    std::ostringstream msg;
    msg << "non-finite " << what << " (" << v << ") at evaluation " << count_;
    throw std::runtime_error(msg.str());
  }

  const Objective& objective_;
  std::vector<double> trial_;
  int count_ = 0;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), or the
// midpoint when the cubic has no usable minimizer.
double cubic_minimizer(const Point& a, const Point& b) {
  const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  const double mid = 0.5 * (a.alpha + b.alpha);
  if (!(disc >= 0.0)) return mid;
  const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
  const double denom = b.slope - a.slope + 2.0 * d2;
  if (denom == 0.0) return mid;
  const double t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
  return std::isfinite(t) ? t : mid;
}

struct LineSearchOutcome {
  bool ok = false;
  Point point;
};

LineSearchOutcome strong_wolfe(Evaluator& eval, std::span<const double> x, std::span<const double> dir,
                               const Point& origin, double alpha0, const LbfgsOptions& opt) {
  const double f0 = origin.value;
  const double d0 = origin.slope;
  int budget = opt.max_line_search_evaluations;
  auto armijo_fails = [&](const Point& p) { return p.value > f0 + opt.c1 * p.alpha * d0; };
  auto curvature_holds = [&](const Point& p) { return std::abs(p.slope) <= -opt.c2 * d0; };

  auto zoom = [&](Point lo, Point hi) -> LineSearchOutcome {
    while (budget-- > 0) {
      const double left = std::min(lo.alpha, hi.alpha);
      const double right = std::max(lo.alpha, hi.alpha);
      const double width = right - left;
      if (width <= 1e-16 * std::max(1.0, right)) break;
      const double alpha = std::clamp(cubic_minimizer(lo, hi), left + 0.1 * width, right - 0.1 * width);
      Point p = eval.probe(x, dir, alpha);
      if (armijo_fails(p) || p.value >= lo.value) {
        hi = std::move(p);
      } else {
        if (curvature_holds(p)) return {true, std::move(p)};
        if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(p);
      }
    }
    // Sufficient decrease holds at lo whenever lo moved off the origin.
    if (lo.alpha > 0.0 && lo.value < f0) return {true, std::move(lo)};
    return {false, std::move(lo)};
  };

  Point prev = origin;
  double alpha = alpha0;
  for (int i = 0; budget-- > 0; ++i) {
    Point p = eval.probe(x, dir, alpha);
    if (armijo_fails(p) || (i > 0 && p.value >= prev.value)) return zoom(std::move(prev), std::move(p));
    if (curvature_holds(p)) return {true, std::move(p)};
    if (p.slope >= 0.0) return zoom(std::move(p), std::move(prev));
    prev = std::move(p);
    alpha *= 2.0;
  }
  if (prev.alpha > 0.0 && prev.value < f0) return {true, std::move(prev)};
  return {false, std::move(prev)};
}

}  // namespace

std::string to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::gradient_converged: return "gradient_converged";
    case LbfgsStatus::function_converged: return "function_converged";
    case LbfgsStatus::max_iterations: return "max_iterations";
    case LbfgsStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double> x0, const LbfgsOptions& opt) {
  if (opt.history < 1) throw std::invalid_argument("lbfgs: history must be positive");
  if (!(0.0 < opt.c1 && opt.c1 < opt.c2 && opt.c2 < 1.0)) {
    throw std::invalid_argument("lbfgs: need 0 < c1 < c2 < 1");
  }
  const std::size_t n = x0.size();
  Evaluator eval(objective, n);

  LbfgsResult result;
  std::vector<double> x = std::move(x0);
  std::vector<double> g(n);
  double f = eval(x, g);
  result.initial_value = f;
  result.history.push_back(f);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> memory;
  std::vector<double> dir(n), alpha_buf;

  auto finish = [&](LbfgsStatus status) {
    result.x = x;
    result.value = f;
    result.status = status;
    result.evaluations = eval.count();
    return result;
  };

  for (int iter = 0;; ++iter) {
    if (inf_norm(g) <= opt.gradient_tolerance * std::max(1.0, std::abs(f))) {
      return finish(LbfgsStatus::gradient_converged);
    }
    if (iter >= opt.max_iterations) return finish(LbfgsStatus::max_iterations);

    // Two-loop recursion for dir = -H g.
    for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
    alpha_buf.assign(memory.size(), 0.0);
    for (std::size_t k = memory.size(); k-- > 0;) {
      alpha_buf[k] = memory[k].rho * dot(memory[k].s, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha_buf[k] * memory[k].y[i];
    }
    if (!memory.empty()) {
      const Pair& last = memory.back();
      const double scale = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& d : dir) d *= scale;
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const double beta = memory[k].rho * dot(memory[k].y, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha_buf[k] - beta) * memory[k].s[i];
    }

    Point origin;
    origin.value = f;
    origin.grad = g;
    origin.slope = dot(g, dir);
    if (!(origin.slope < 0.0)) {
      // Not a descent direction: drop the curvature history and restart.
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      origin.slope = dot(g, dir);
    }
    const double alpha0 = memory.empty() ? 1.0 / std::sqrt(std::max(dot(g, g), 1e-300)) : 1.0;

    LineSearchOutcome ls = strong_wolfe(eval, x, dir, origin, alpha0, opt);
    if (!ls.ok) return finish(LbfgsStatus::line_search_failed);

    Pair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = ls.point.alpha * dir[i];
      pair.y[i] = ls.point.grad[i] - g[i];
      x[i] += pair.s[i];
    }
    const double f_prev = f;
    f = ls.point.value;
    g = std::move(ls.point.grad);
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-12 * std::sqrt(dot(pair.s, pair.s) * dot(pair.y, pair.y))) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > static_cast<std::size_t>(opt.history)) memory.pop_front();
    }

    result.iterations = iter + 1;
    result.history.push_back(f);
    if (opt.on_iteration) {
      opt.on_iteration({iter + 1, eval.count(), f, inf_norm(g), ls.point.alpha});
    }
    if (f_prev - f <= opt.function_tolerance * std::max({1.0, std::abs(f), std::abs(f_prev)})) {
      return finish(LbfgsStatus::function_converged);
    }
  }
}

}  // namespace trdpd
