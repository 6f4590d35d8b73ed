#pragma once

#include <ismoe/engine.hpp>
#include <ismoe/types.hpp>

#include <string>

namespace ismoe {

struct EvalReport {
  double test_log_likelihood = 0.0;
  double mse = 0.0;
  Vector per_point_log_density;
  double ess = 1.0;
  double runtime_seconds = 0.0;
};

// Per-point log N(y | mean, variance).
Vector gaussian_log_densities(const Vector &mean, const Vector &variance,
                              const Vector &y_true);

// Sum of per-point log densities under the moment-matched Gaussian.
double test_log_likelihood(const Vector &mean, const Vector &variance,
                           const Vector &y_true);
double test_log_likelihood(const PredictiveResult &pred, const Vector &y_true);

double mse(const Vector &pred_mean, const Vector &y_true);

// Diagnostic: sum_m log sum_j w_j N(y_m | mean_jm, var_jm), the density of the
// importance mixture before moment matching. Needs the per-sample moments.
double mixture_test_log_likelihood(const PredictiveResult &pred, const Vector &y_true);

EvalReport evaluate(const Vector &mean, const Vector &variance, const Vector &y_true,
                    double ess, double runtime_seconds);

// Single JSON object with the EvalReport fields.
std::string to_json(const EvalReport &report, int indent = 2);

} // namespace ismoe
