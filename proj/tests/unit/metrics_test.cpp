#include <ismoe/errors.hpp>
#include <ismoe/metrics.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace ismoe {
namespace {

Vector randn(std::mt19937_64 &rng, Index n) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    v(i) = z(rng);
  }
  return v;
}

TEST(TestLogLikelihood, UnitVarianceAtMean) {
  const Vector y = Vector::Constant(1, 0.7);
  EXPECT_NEAR(test_log_likelihood(y, Vector::Ones(1), y), -0.9189385332046727, 1e-15);
  EXPECT_NEAR(test_log_likelihood(y, Vector::Ones(1), y),
              -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
}

TEST(TestLogLikelihood, DecreasesWithoutBoundAsVarianceGrows) {
  const Vector mean = Vector::Zero(1);
  const Vector y = Vector::Constant(1, 0.5);
  double prev = test_log_likelihood(mean, Vector::Ones(1), y);
  for (double v = 10.0; v < 1e300; v *= 1e10) {
    const double cur = test_log_likelihood(mean, Vector::Constant(1, v), y);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_LT(prev, -300.0);
}

TEST(TestLogLikelihood, EmptyIsZero) {
  EXPECT_EQ(test_log_likelihood(Vector(0), Vector(0), Vector(0)), 0.0);
}

TEST(TestLogLikelihood, RejectsBadVariancesAndLengths) {
  EXPECT_THROW(test_log_likelihood(Vector::Zero(2), (Vector(2) << 1.0, 0.0).finished(),
                                   Vector::Zero(2)),
               InvalidArgument);
  EXPECT_THROW(test_log_likelihood(Vector::Zero(1), Vector::Constant(1, -1.0), Vector::Zero(1)),
               InvalidArgument);
  EXPECT_THROW(test_log_likelihood(Vector::Zero(2), Vector::Ones(2), Vector::Zero(3)),
               ShapeError);
}

TEST(TestLogLikelihood, MaximizedAtEmpiricalMse) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector mean = randn(rng, 30);
    const Vector y = mean + 0.7 * randn(rng, 30);
    const double best = mse(mean, y);
    // Golden-section search over log variance.
    double lo = std::log(best) - 5.0;
    double hi = std::log(best) + 5.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double lv) {
      return -test_log_likelihood(mean, Vector::Constant(30, std::exp(lv)), y);
    };
    for (int it = 0; it < 200; ++it) {
      const double a = hi - g * (hi - lo);
      const double b = lo + g * (hi - lo);
      (f(a) < f(b) ? hi : lo) = f(a) < f(b) ? b : a;
    }
    EXPECT_NEAR(std::exp(0.5 * (lo + hi)), best, 1e-4 * best);
  }
}

TEST(TestLogLikelihood, PredictiveResultOverload) {
  PredictiveResult pred;
  pred.mean = (Vector(2) << 0.0, 1.0).finished();
  pred.variance = (Vector(2) << 1.0, 2.0).finished();
  const Vector y = (Vector(2) << 0.5, 0.0).finished();
  EXPECT_EQ(test_log_likelihood(pred, y), test_log_likelihood(pred.mean, pred.variance, y));
}

TEST(Mse, Examples) {
  const Vector v = (Vector(3) << 1.0, -2.0, 3.5).finished();
  EXPECT_EQ(mse(v, v), 0.0);
  EXPECT_EQ(mse(Vector::Zero(2), (Vector(2) << 1.0, -1.0).finished()), 1.0);
  EXPECT_THROW(mse(Vector::Zero(2), Vector::Zero(3)), ShapeError);
  EXPECT_THROW(mse(Vector(0), Vector(0)), InvalidArgument);
}

TEST(Mse, MatchesTwoPassLoop) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    const Vector a = randn(rng, 57);
    const Vector b = randn(rng, 57);
    std::vector<double> diffs;
    for (Index i = 0; i < 57; ++i) {
      diffs.push_back(a(i) - b(i));
    }
    double acc = 0.0;
    for (double d : diffs) {
      acc += d * d;
    }
    EXPECT_NEAR(mse(a, b), acc / 57.0, 1e-14);
  }
}

TEST(Metrics, InvariantToPointOrder) {
  std::mt19937_64 rng(2);
  const Vector mean = randn(rng, 25);
  const Vector var = randn(rng, 25).cwiseAbs().array() + 0.1;
  const Vector y = randn(rng, 25);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(25);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 25, rng);
  EXPECT_NEAR(test_log_likelihood(perm * mean, perm * var, perm * y),
              test_log_likelihood(mean, var, y), 1e-12);
  EXPECT_NEAR(mse(perm * mean, perm * y), mse(mean, y), 1e-14);
}

TEST(MixtureLogLikelihood, SingleSampleMatchesGaussian) {
  PredictiveResult pred;
  pred.mean = (Vector(2) << 0.0, 1.0).finished();
  pred.variance = (Vector(2) << 1.0, 2.0).finished();
  pred.per_sample_means = Matrix(pred.mean.transpose());
  pred.per_sample_variances = Matrix(pred.variance.transpose());
  pred.normalized_weights = Vector::Ones(1);
  const Vector y = (Vector(2) << 0.3, -0.2).finished();
  EXPECT_NEAR(mixture_test_log_likelihood(pred, y), test_log_likelihood(pred, y), 1e-12);
  pred.per_sample_means.reset();
  EXPECT_THROW(mixture_test_log_likelihood(pred, y), InvalidArgument);
}

TEST(MixtureLogLikelihood, TwoComponentDensity) {
  PredictiveResult pred;
  pred.per_sample_means = (Matrix(2, 1) << -1.0, 1.0).finished();
  pred.per_sample_variances = (Matrix(2, 1) << 1.0, 1.0).finished();
  pred.normalized_weights = (Vector(2) << 0.25, 0.75).finished();
  const double y = 0.4;
  const double dens = 0.25 * std::exp(-0.5 * 1.96) / std::sqrt(2.0 * std::numbers::pi) +
                      0.75 * std::exp(-0.5 * 0.36) / std::sqrt(2.0 * std::numbers::pi);
  EXPECT_NEAR(mixture_test_log_likelihood(pred, Vector::Constant(1, y)), std::log(dens), 1e-12);
}

TEST(EvalReportTest, EvaluateAndSerialize) {
  const Vector mean = (Vector(2) << 0.0, 1.0).finished();
  const Vector var = Vector::Ones(2);
  const Vector y = (Vector(2) << 0.0, 3.0).finished();
  const EvalReport r = evaluate(mean, var, y, 3.5, 0.25);
  EXPECT_EQ(r.mse, 2.0);
  EXPECT_NEAR(r.test_log_likelihood, 2 * -0.9189385332046727 - 2.0, 1e-12);
  EXPECT_EQ(r.per_point_log_density.size(), 2);
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(j.at("mse").get<double>(), 2.0);
  EXPECT_EQ(j.at("ess").get<double>(), 3.5);
  EXPECT_EQ(j.at("runtime_seconds").get<double>(), 0.25);
  EXPECT_EQ(j.at("per_point_log_density").size(), 2u);
  EXPECT_EQ(j.at("test_log_likelihood").get<double>(), r.test_log_likelihood);
}

} // namespace
} // namespace ismoe
