#pragma once

#include <ismoe/types.hpp>

#include <functional>
#include <string>

namespace ismoe {

// Returns f(x) and writes the gradient into `grad`. May throw NumericalError;
// during a line search that is treated as f = +inf and the step is shortened.
using GradientObjective = std::function<double(const Vector &x, Vector &grad)>;

struct LbfgsOptions {
  int max_iterations = 200;
  // Stop when max|g| <= gradient_tolerance * max(1, |f|).
  double gradient_tolerance = 1e-6;
  int history = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
  // Iterates are kept inside |x_i| <= max_abs_coordinate.
  double max_abs_coordinate = 20.0;
};

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  Vector gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string status;
};

// Minimizes with limited-memory BFGS and a line search satisfying the strong
// Wolfe conditions. Never returns a point worse than x0.
LbfgsResult lbfgs_minimize(const GradientObjective &objective, Vector x0,
                           const LbfgsOptions &options = {});

} // namespace ismoe
