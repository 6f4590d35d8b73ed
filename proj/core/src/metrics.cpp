#include <ismoe/metrics.hpp>

#include <ismoe/errors.hpp>
#include <ismoe/partition.hpp>

#include <json.hpp>

#include <cmath>

namespace ismoe {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_lengths(Index a, Index b) {
  if (a != b) {
    throw ShapeError("prediction and target vectors have different lengths");
  }
}

} // namespace

Vector gaussian_log_densities(const Vector &mean, const Vector &variance,
                              const Vector &y_true) {
  check_lengths(mean.size(), y_true.size());
  check_lengths(variance.size(), y_true.size());
  Vector out(y_true.size());
  for (Index i = 0; i < y_true.size(); ++i) {
    const double v = variance(i);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("predictive variances must be positive and finite");
    }
    const double r = y_true(i) - mean(i);
    out(i) = -0.5 * (kLog2Pi + std::log(v) + r * r / v);
  }
  return out;
}

double test_log_likelihood(const Vector &mean, const Vector &variance,
                           const Vector &y_true) {
  return gaussian_log_densities(mean, variance, y_true).sum();
}

double test_log_likelihood(const PredictiveResult &pred, const Vector &y_true) {
  return test_log_likelihood(pred.mean, pred.variance, y_true);
}

double mse(const Vector &pred_mean, const Vector &y_true) {
  check_lengths(pred_mean.size(), y_true.size());
  if (y_true.size() == 0) {
    throw InvalidArgument("mse of an empty vector is undefined");
  }
  return (pred_mean - y_true).squaredNorm() / static_cast<double>(y_true.size());
}

double mixture_test_log_likelihood(const PredictiveResult &pred, const Vector &y_true) {
  if (!pred.per_sample_means || !pred.per_sample_variances) {
    throw InvalidArgument("mixture log-likelihood needs per-sample predictions");
  }
  const Matrix &means = *pred.per_sample_means;
  const Matrix &vars = *pred.per_sample_variances;
  check_lengths(means.cols(), y_true.size());
  const Vector log_w = pred.normalized_weights.array().log().matrix();
  double total = 0.0;
  Vector terms(means.rows());
  for (Index m = 0; m < y_true.size(); ++m) {
    const Vector lp = gaussian_log_densities(means.col(m), vars.col(m),
                                             Vector::Constant(means.rows(), y_true(m)));
    terms = log_w + lp;
    total += log_sum_exp(terms);
  }
  return total;
}

EvalReport evaluate(const Vector &mean, const Vector &variance, const Vector &y_true,
                    double ess, double runtime_seconds) {
  EvalReport report;
  report.per_point_log_density = gaussian_log_densities(mean, variance, y_true);
  report.test_log_likelihood = report.per_point_log_density.sum();
  report.mse = y_true.size() > 0 ? mse(mean, y_true) : 0.0;
  report.ess = ess;
  report.runtime_seconds = runtime_seconds;
  return report;
}

std::string to_json(const EvalReport &report, int indent) {
  nlohmann::ordered_json j;
  j["test_log_likelihood"] = report.test_log_likelihood;
  j["mse"] = report.mse;
  j["ess"] = report.ess;
  j["runtime_seconds"] = report.runtime_seconds;
  j["per_point_log_density"] =
      std::vector<double>(report.per_point_log_density.data(),
                          report.per_point_log_density.data() +
                              report.per_point_log_density.size());
  return j.dump(indent);
}

} // namespace ismoe
