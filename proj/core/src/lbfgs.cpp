#include <ismoe/lbfgs.hpp>

#include <ismoe/errors.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace ismoe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Trial {
  double step = 0.0;
  double f = kInf;
  double slope = 0.0; // directional derivative
  Vector x;
  Vector grad;
  bool valid = false;
};

class LineSearch {
public:
  LineSearch(const GradientObjective &objective, const LbfgsOptions &options,
             const Vector &x, double f0, const Vector &g0, const Vector &dir)
      : objective_(objective), options_(options), x_(x), f0_(f0), dir_(dir),
        d0_(g0.dot(dir)) {}

  // Returns the accepted trial, or an invalid trial if none satisfied the
  // sufficient-decrease condition.
  Trial run(double initial_step) {
    Trial prev;
    prev.step = 0.0;
    prev.f = f0_;
    prev.slope = d0_;
    prev.valid = true;

    double step = initial_step;
    for (int i = 0; i < options_.max_line_search; ++i) {
      Trial t = evaluate(step);
      if (!t.valid || t.f > f0_ + options_.c1 * step * d0_ ||
          (i > 0 && t.f >= prev.f)) {
        return zoom(prev, t);
      }
      if (std::abs(t.slope) <= -options_.c2 * d0_) {
        return t;
      }
      if (t.slope >= 0.0) {
        return zoom(t, prev);
      }
      remember(t);
      prev = t;
      step *= 2.0;
    }
    return best_;
  }

  int evaluations() const { return evaluations_; }

private:
  Trial evaluate(double step) {
    Trial t;
    t.step = step;
    t.x = x_ + step * dir_;
    if ((t.x.array().abs() > options_.max_abs_coordinate).any()) {
      return t;
    }
    t.grad.resize(t.x.size());
    ++evaluations_;
    try {
      t.f = objective_(t.x, t.grad);
    } catch (const NumericalError &) {
      t.f = kInf;
      return t;
    }
    if (!std::isfinite(t.f) || !t.grad.allFinite()) {
      t.f = kInf;
      return t;
    }
    t.slope = t.grad.dot(dir_);
    t.valid = true;
    return t;
  }

  void remember(const Trial &t) {
    if (t.valid && t.f <= f0_ + options_.c1 * t.step * d0_ &&
        (!best_.valid || t.f < best_.f)) {
      best_ = t;
    }
  }

  Trial zoom(Trial lo, Trial hi) {
    for (int i = 0; i < options_.max_line_search; ++i) {
      const double width = hi.step - lo.step;
      double step = 0.5 * (lo.step + hi.step);
      if (hi.valid) {
        // Quadratic through (lo.f, lo.slope) and hi.f.
        const double denom = 2.0 * (hi.f - lo.f - lo.slope * width);
        if (denom != 0.0) {
          const double candidate = lo.step - lo.slope * width * width / denom;
          const double a = std::min(lo.step, hi.step) + 0.1 * std::abs(width);
          const double b = std::max(lo.step, hi.step) - 0.1 * std::abs(width);
          if (std::isfinite(candidate) && candidate >= a && candidate <= b) {
            step = candidate;
          }
        }
      }
      if (std::abs(width) < 1e-16 * std::max(1.0, std::abs(lo.step))) {
        break;
      }
      Trial t = evaluate(step);
      if (!t.valid || t.f > f0_ + options_.c1 * step * d0_ || t.f >= lo.f) {
        hi = t;
        continue;
      }
      remember(t);
      if (std::abs(t.slope) <= -options_.c2 * d0_) {
        return t;
      }
      if (t.slope * (hi.step - lo.step) >= 0.0) {
        hi = lo;
      }
      lo = t;
    }
    if (lo.step > 0.0) {
      remember(lo);
    }
    return best_;
  }

  const GradientObjective &objective_;
  const LbfgsOptions &options_;
  const Vector &x_;
  double f0_;
  const Vector &dir_;
  double d0_;
  Trial best_;
  int evaluations_ = 0;
};

bool gradient_converged(const Vector &g, double f, double tol) {
  return g.lpNorm<Eigen::Infinity>() <= tol * std::max(1.0, std::abs(f));
}

} // namespace

LbfgsResult lbfgs_minimize(const GradientObjective &objective, Vector x0,
                           const LbfgsOptions &options) {
  LbfgsResult result;
  result.x = std::move(x0);
  result.gradient.resize(result.x.size());
  result.f = objective(result.x, result.gradient);
  result.evaluations = 1;
  if (!std::isfinite(result.f) || !result.gradient.allFinite()) {
    throw NumericalError("objective is not finite at the starting point");
  }

  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (gradient_converged(result.gradient, result.f, options.gradient_tolerance)) {
      result.converged = true;
      result.status = "gradient tolerance reached";
      return result;
    }

    // Two-loop recursion.
    Vector q = -result.gradient;
    std::vector<double> a(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      a[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= a[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double b = rho_hist[i] * y_hist[i].dot(q);
      q += (a[i] - b) * s_hist[i];
    }
    Vector dir = q;
    if (!(dir.dot(result.gradient) < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -result.gradient;
    }

    double initial_step = 1.0;
    if (s_hist.empty()) {
      initial_step = std::min(1.0, 1.0 / std::max(1e-12, dir.lpNorm<Eigen::Infinity>()));
    }

    LineSearch search(objective, options, result.x, result.f, result.gradient, dir);
    Trial accepted = search.run(initial_step);
    result.evaluations += search.evaluations();
    result.iterations = iter + 1;
    if (!accepted.valid || !(accepted.f <= result.f)) {
      result.status = "line search made no progress";
      result.converged =
          gradient_converged(result.gradient, result.f, options.gradient_tolerance * 1e3);
      return result;
    }

    Vector s = accepted.x - result.x;
    Vector y = accepted.grad - result.gradient;
    const double sy = s.dot(y);
    const double f_prev = result.f;
    result.x = std::move(accepted.x);
    result.f = accepted.f;
    result.gradient = std::move(accepted.grad);

    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    if (std::abs(f_prev - result.f) <=
        std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(result.f))) {
      result.status = "objective stalled at machine precision";
      result.converged = true;
      return result;
    }
  }
  result.converged =
      gradient_converged(result.gradient, result.f, options.gradient_tolerance);
  result.status = result.converged ? "gradient tolerance reached"
                                   : "maximum iterations reached";
  return result;
}

} // namespace ismoe
