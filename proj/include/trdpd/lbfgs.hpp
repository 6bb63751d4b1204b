#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace trdpd {

/// Writes the gradient into `grad` and returns the objective value.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsIteration {
  int iteration = 0;
  int evaluations = 0;
  double value = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
};

struct LbfgsOptions {
  int history = 10;
  int max_iterations = 200;
  /// Strong-Wolfe sufficient decrease and curvature constants.
  double c1 = 1e-4;
  double c2 = 0.9;
  /// Stop when max|g| <= gradient_tolerance * max(1, |f|).
  double gradient_tolerance = 1e-8;
  /// Stop when an iteration lowers f by less than function_tolerance * max(1, |f|).
  double function_tolerance = 1e-12;
  int max_line_search_evaluations = 30;
  std::function<void(const LbfgsIteration&)> on_iteration;
};

enum class LbfgsStatus {
  gradient_converged,
  function_converged,
  max_iterations,
  line_search_failed,
};

std::string to_string(LbfgsStatus status);

struct LbfgsResult {
  std::vector<double> x;  // best iterate seen
  double value = 0.0;
  double initial_value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  std::vector<double> history;  // objective after each iteration, starting with f(x0)
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
/// cubic-interpolation zoom). Throws std::runtime_error if the objective
/// returns a non-finite value or gradient.
LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options = {});

}  // namespace trdpd
