#include <ismoe/errors.hpp>
#include <ismoe/gp.hpp>

#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace ismoe {
namespace {

Matrix random_inputs(std::mt19937_64 &rng, Index n, Index d, double spread = 1.0) {
  std::uniform_real_distribution<double> u(-spread, spread);
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      X(i, j) = u(rng);
    }
  }
  return X;
}

Vector random_vector(std::mt19937_64 &rng, Index n) {
  std::normal_distribution<double> z(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    v(i) = z(rng);
  }
  return v;
}

KernelHyperparams random_hyper(std::mt19937_64 &rng, Index dim, bool ard) {
  std::uniform_real_distribution<double> amp(std::log(0.2), std::log(5.0));
  std::uniform_real_distribution<double> ls(std::log(0.5), std::log(20.0));
  std::uniform_real_distribution<double> noise(std::log(0.05), std::log(1.0));
  KernelHyperparams h;
  h.log_amplitude = amp(rng);
  h.log_inv_lengthscale.resize(ard ? dim : 1);
  for (Index d = 0; d < h.log_inv_lengthscale.size(); ++d) {
    h.log_inv_lengthscale(d) = ls(rng);
  }
  h.log_noise = noise(rng);
  return h;
}

TEST(KernelValue, ZeroDistanceGivesAmplitude) {
  const auto h = KernelHyperparams::isotropic(1.0, 15.0, 1.0);
  EXPECT_DOUBLE_EQ(kernel_value(Vector::Zero(1), Vector::Zero(1), h), 1.0);
}

TEST(KernelValue, ClosedFormScalar) {
  const Vector x0 = Vector::Zero(1);
  const Vector x1 = Vector::Constant(1, 0.1);
  EXPECT_NEAR(kernel_value(x0, x1, KernelHyperparams::isotropic(1.0, 15.0, 1.0)),
              0.8607079764250578, 1e-14);
  EXPECT_NEAR(kernel_value(x0, x1, KernelHyperparams::isotropic(1.0, 5000.0, 1.0)) /
                  1.9287498479639178e-22,
              1.0, 1e-10);
}

TEST(KernelValue, SymmetricOverRandomPairs) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    const Index d = 1 + t % 4;
    const Vector a = random_vector(rng, d);
    const Vector b = random_vector(rng, d);
    const auto h = random_hyper(rng, d, t % 2 == 0);
    EXPECT_EQ(kernel_value(a, b, h), kernel_value(b, a, h));
  }
}

TEST(KernelValue, DimensionMismatchThrows) {
  const auto h = KernelHyperparams::isotropic(1.0, 1.0, 1.0);
  EXPECT_THROW(kernel_value(Vector::Zero(2), Vector::Zero(3), h), ShapeError);
  const auto ard = KernelHyperparams::ard(1.0, Vector::Ones(3), 1.0);
  EXPECT_THROW(kernel_value(Vector::Zero(2), Vector::Zero(2), ard), ShapeError);
}

TEST(KernelMatrix, SinglePoint) {
  const auto h = KernelHyperparams::isotropic(2.5, 3.0, 1.0);
  const Matrix X = Matrix::Constant(1, 2, 0.3);
  const Matrix K = kernel_matrix(X, X, h);
  ASSERT_EQ(K.rows(), 1);
  EXPECT_DOUBLE_EQ(K(0, 0), 2.5);
}

TEST(KernelMatrix, MatchesElementwiseLoop) {
  std::mt19937_64 rng(11);
  for (bool ard : {false, true}) {
    const Matrix X1 = random_inputs(rng, 7, 3);
    const Matrix X2 = random_inputs(rng, 5, 3);
    const auto h = random_hyper(rng, 3, ard);
    const Matrix K = kernel_matrix(X1, X2, h);
    const Vector gamma = h.inv_lengthscales(3);
    for (Index i = 0; i < 7; ++i) {
      for (Index j = 0; j < 5; ++j) {
        EXPECT_NEAR(K(i, j),
                    oracle::se_kernel(X1.row(i).transpose(), X2.row(j).transpose(),
                                      h.amplitude(), gamma),
                    1e-14);
        EXPECT_EQ(K(i, j), kernel_value(X1.row(i).transpose(), X2.row(j).transpose(), h));
      }
    }
  }
}

TEST(KernelMatrix, ColumnMismatchThrows) {
  const auto h = KernelHyperparams::isotropic(1.0, 1.0, 1.0);
  EXPECT_THROW(kernel_matrix(Matrix::Zero(2, 2), Matrix::Zero(2, 3), h), ShapeError);
}

TEST(KernelMatrix, DuplicatedRowsArePsdButRankDeficient) {
  std::mt19937_64 rng(3);
  Matrix X = random_inputs(rng, 6, 2);
  X.row(3) = X.row(1);
  X.row(5) = X.row(1);
  const auto h = KernelHyperparams::isotropic(1.7, 2.0, 1.0);
  const Matrix K = kernel_matrix(X, X, h);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * 1.7);
  EXPECT_LT(eig.eigenvalues().minCoeff(), 1e-10);
}

TEST(KernelMatrix, PsdOnRandomInputs) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const Index n = 2 + static_cast<Index>(rng() % 49);
    const Index d = 1 + static_cast<Index>(rng() % 3);
    const Matrix X = random_inputs(rng, n, d);
    const auto h = random_hyper(rng, d, t % 3 == 0);
    const Matrix K = kernel_matrix(X, X, h);
    EXPECT_TRUE(K.isApprox(K.transpose(), 0.0) || (K - K.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(K);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * h.amplitude());
  }
}

TEST(LogMarginal, SinglePointClosedForm) {
  const Matrix X = Matrix::Zero(1, 1);
  const Vector Y = Vector::Zero(1);
  const auto lm = log_marginal_likelihood(X, Y, KernelHyperparams::isotropic(1.0, 1.0, 1.0));
  EXPECT_NEAR(lm.value, -1.2655121234846454, 1e-8);
}

TEST(LogMarginal, TwoPointsMatchExplicitInverse) {
  Matrix X(2, 1);
  X << 0.1, 0.7;
  Vector Y(2);
  Y << 0.3, -0.5;
  const auto h = KernelHyperparams::isotropic(1.3, 2.0, 0.4);
  const double value = log_marginal_likelihood(X, Y, h).value;
  // Frozen from scipy.stats.multivariate_normal on the same instance.
  EXPECT_NEAR(value, -2.448145176953844, 1e-7);
  EXPECT_NEAR(value, oracle::log_marginal_2x2(X, Y, 1.3, 2.0, 0.4), 1e-7);

  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const Matrix Xr = random_inputs(rng, 2, 1);
    const Vector Yr = random_vector(rng, 2);
    const auto hr = random_hyper(rng, 1, false);
    EXPECT_NEAR(log_marginal_likelihood(Xr, Yr, hr).value,
                oracle::log_marginal_2x2(Xr, Yr, hr.amplitude(),
                                         std::exp(hr.log_inv_lengthscale(0)), hr.noise_var()),
                1e-6);
  }
}

TEST(LogMarginal, MatchesDenseOracleWithJitter) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const Matrix X = random_inputs(rng, 12, 2);
    const Vector Y = random_vector(rng, 12);
    const auto h = random_hyper(rng, 2, t % 2 == 1);
    const auto lm = log_marginal_likelihood(X, Y, h);
    EXPECT_NEAR(lm.value,
                oracle::dense_log_marginal(X, Y, h.amplitude(), h.inv_lengthscales(2),
                                           h.noise_var(), lm.jitter),
                1e-8);
    EXPECT_EQ(lm.value, log_marginal_value(X, Y, h));
  }
}

TEST(LogMarginal, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(1234);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const Index n = 1 + static_cast<Index>(rng() % 20);
    const Index d = 1 + static_cast<Index>(rng() % 3);
    const bool ard = t % 4 == 3;
    const Matrix X = random_inputs(rng, n, d);
    const Vector Y = random_vector(rng, n);
    const auto h = random_hyper(rng, d, ard);
    const auto lm = log_marginal_likelihood(X, Y, h);
    const Vector fd = oracle::central_difference(
        [&](const Vector &theta) {
          return log_marginal_likelihood(X, Y, KernelHyperparams::from_vector(theta)).value;
        },
        h.to_vector(), 1e-5);
    const double rel = (lm.gradient - fd).norm() / std::max(fd.norm(), 1e-8);
    EXPECT_LT(rel, 1e-5) << "instance " << t << " n=" << n << " d=" << d;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(LogMarginal, BlockAdditivityForSeparatedGroups) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 10; ++t) {
    Matrix A = random_inputs(rng, 6, 1);
    Matrix B = random_inputs(rng, 5, 1);
    B.array() += 100.0; // gamma * 98^2 >> 700: cross-kernel underflows
    Matrix X(11, 1);
    X << A, B;
    const Vector Y = random_vector(rng, 11);
    const auto h = KernelHyperparams::isotropic(1.0, 1.0, 0.3);
    const double joint = log_marginal_likelihood(X, Y, h).value;
    const double split = log_marginal_likelihood(A, Y.head(6), h).value +
                         log_marginal_likelihood(B, Y.tail(5), h).value;
    EXPECT_NEAR(joint, split, 1e-6);
  }
}

TEST(LogMarginal, DeterministicAcrossCalls) {
  std::mt19937_64 rng(4);
  const Matrix X = random_inputs(rng, 15, 2);
  const Vector Y = random_vector(rng, 15);
  const auto h = random_hyper(rng, 2, false);
  const auto a = log_marginal_likelihood(X, Y, h);
  const auto b = log_marginal_likelihood(X, Y, h);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.gradient, b.gradient);
}

TEST(LogMarginal, NonFiniteInputsExhaustJitter) {
  Matrix X(2, 1);
  X << 0.0, std::nan("");
  const Vector Y = Vector::Zero(2);
  try {
    log_marginal_likelihood(X, Y, KernelHyperparams::isotropic(1.0, 1.0, 1.0));
    FAIL() << "expected NumericalError";
  } catch (const NumericalError &e) {
    EXPECT_DOUBLE_EQ(e.jitter(), kJitterMax);
  }
}

TEST(GPFit, SinglePointCholesky) {
  const Matrix X = Matrix::Constant(1, 1, 0.2);
  const Vector Y = Vector::Constant(1, 0.4);
  const auto h = KernelHyperparams::isotropic(1.5, 3.0, 0.5);
  const GPModel m = gp_fit(X, Y, h);
  EXPECT_NEAR(m.chol()(0, 0), std::sqrt(1.5 + 0.5 + kJitterStart * 1.5), 1e-15);
}

TEST(GPFit, CachedLogMarginalMatchesDirectEvaluation) {
  std::mt19937_64 rng(12);
  const Matrix X = random_inputs(rng, 20, 2);
  const Vector Y = random_vector(rng, 20);
  const auto h = random_hyper(rng, 2, false);
  const GPModel m = gp_fit(X, Y, h);
  EXPECT_EQ(m.log_marginal(), log_marginal_likelihood(X, Y, h).value);
  EXPECT_EQ(m.jitter_escalations(), 0);
  Matrix K = kernel_matrix(X, X, h);
  K.diagonal().array() += h.noise_var();
  const Matrix LLt = m.chol() * m.chol().transpose();
  EXPECT_LT((LLt - K).cwiseAbs().maxCoeff(), 10 * m.jitter() * h.amplitude());
  // alpha solves the (jittered) system.
  EXPECT_LT((LLt * m.alpha() - Y).norm(), 1e-9);
}

TEST(GPFit, RejectsEmptyAndMismatchedData) {
  const auto h = KernelHyperparams::isotropic(1.0, 1.0, 1.0);
  EXPECT_THROW(gp_fit(Matrix(0, 1), Vector(0), h), InvalidArgument);
  EXPECT_THROW(gp_fit(Matrix::Zero(3, 1), Vector::Zero(2), h), ShapeError);
}

TEST(GPPredict, InterpolatesTrainingPointsWhenNoiseless) {
  std::mt19937_64 rng(2);
  const Matrix X = Vector::LinSpaced(8, -1.0, 1.0);
  const Vector Y = random_vector(rng, 8);
  const auto h = KernelHyperparams::isotropic(1.0, 20.0, 1e-10);
  const GPModel m = gp_fit(X, Y, h);
  const auto p = m.predict(X.topRows(3));
  for (Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(p.mean(i), Y(i), 1e-4);
    EXPECT_LT(p.variance(i), 1e-5);
    EXPECT_GT(p.variance(i), 0.0);
  }
}

TEST(GPPredict, RevertsToPriorFarFromData) {
  std::mt19937_64 rng(6);
  const Matrix X = random_inputs(rng, 10, 1);
  const Vector Y = random_vector(rng, 10);
  const auto h = KernelHyperparams::isotropic(1.3, 5.0, 0.2);
  const GPModel m = gp_fit(X, Y, h);
  const auto p = m.predict(Matrix::Constant(1, 1, 10.0)); // gamma * d^2 > 400
  EXPECT_NEAR(p.mean(0), 0.0, 1e-12);
  EXPECT_NEAR(p.variance(0), 1.3 + 0.2, 1e-12);
}

TEST(GPPredict, TwoPointClosedForm) {
  Matrix X(2, 1);
  X << 0.1, 0.7;
  Vector Y(2);
  Y << 0.3, -0.5;
  const GPModel m = gp_fit(X, Y, KernelHyperparams::isotropic(1.3, 2.0, 0.4));
  const auto p = m.predict(Matrix::Constant(1, 1, 0.4));
  // Frozen from the explicit 2x2 inverse in numpy.
  EXPECT_NEAR(p.mean(0), -0.09309512573754036, 1e-7);
  EXPECT_NEAR(p.variance(0), 0.6891253903699963, 1e-7);
}

TEST(GPPredict, DimensionMismatchThrows) {
  const GPModel m = gp_fit(Matrix::Zero(2, 2) + Matrix::Identity(2, 2), Vector::Ones(2),
                           KernelHyperparams::isotropic(1.0, 1.0, 1.0));
  EXPECT_THROW(m.predict(Matrix::Zero(1, 3)), ShapeError);
}

TEST(Hyperparams, VectorRoundTripAndValidation) {
  const auto h = KernelHyperparams::ard(2.0, (Vector(3) << 1.0, 2.0, 3.0).finished(), 0.1);
  EXPECT_TRUE(KernelHyperparams::from_vector(h.to_vector()) == h);
  EXPECT_NO_THROW(h.validate(3));
  EXPECT_THROW(h.validate(2), ShapeError);
  KernelHyperparams bad = h;
  bad.log_noise = std::numeric_limits<double>::infinity();
  EXPECT_THROW(bad.validate(3), InvalidArgument);
}

} // namespace
} // namespace ismoe
