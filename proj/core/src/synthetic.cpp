#include <ismoe/synthetic.hpp>

#include <ismoe/errors.hpp>
#include <ismoe/gp.hpp>
#include <ismoe/rng.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ismoe {

namespace {

enum Stream : std::uint64_t { kLatent = 1, kNoise = 2, kSplit = 3, kInputs = 4 };

void check_sizes(Index n_train, Index n_test) {
  if (n_train < 1 || n_test < 1) {
    throw InvalidArgument("generators need at least one training and one test point");
  }
  if (n_train + n_test > kMaxGeneratedPoints) {
    std::ostringstream msg;
    msg << "joint size " << n_train + n_test << " exceeds the dense generation cap of "
        << kMaxGeneratedPoints << " points";
    throw InvalidArgument(msg.str());
  }
}

void check_noise(double noise_var) {
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
    throw InvalidArgument("noise variance must be finite and non-negative");
  }
}

Vector draw_gp(const Matrix &X, const KernelHyperparams &hyper, std::uint64_t seed) {
  const Index n = X.rows();
  const Matrix K = kernel_matrix(X, X, hyper);
  const double nu = hyper.amplitude();
  for (double j = 1e-8; j <= kJitterMax * (1.0 + 1e-9); j *= 10.0) {
    Matrix A = K;
    A.diagonal().array() += nu * j;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) {
      continue;
    }
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(n);
    for (Index i = 0; i < n; ++i) {
      z(i) = normal(rng);
    }
    return llt.matrixL() * z;
  }
  throw NumericalError("could not factor the generating kernel matrix", kJitterMax);
}

Vector add_noise(const Vector &f, double noise_var, std::uint64_t seed) {
  Vector y = f;
  if (noise_var > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(noise_var));
    for (Index i = 0; i < y.size(); ++i) {
      y(i) += normal(rng);
    }
  }
  return y;
}

Matrix grid(Index n) {
  Matrix X(n, 1);
  if (n == 1) {
    X(0, 0) = 0.0;
    return X;
  }
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return X;
}

// Splits `all` into (train, test) with n_test rows chosen uniformly; both parts
// keep the original row order.
TrainTest carve_test(const Dataset &all, Index n_test, std::uint64_t seed) {
  const Index n = all.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> test(order.begin(), order.begin() + n_test);
  std::vector<Index> train(order.begin() + n_test, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {all.subset(train), all.subset(test)};
}

} // namespace

TrainTest gen_stationary(Index n_train, Index n_test, double gamma, double amplitude,
                         double noise_var, std::uint64_t seed) {
  check_sizes(n_train, n_test);
  check_noise(noise_var);
  if (!(gamma > 0.0) || !(amplitude > 0.0)) {
    throw InvalidArgument("gamma and amplitude must be positive");
  }
  Dataset all;
  all.inputs = grid(n_train + n_test);
  // The noise entry of the hyperparameters is unused by kernel_matrix.
  const auto hyper = KernelHyperparams::isotropic(amplitude, gamma, 1.0);
  all.true_function = draw_gp(all.inputs, hyper, derive_seed(seed, {kLatent}));
  all.outputs = add_noise(*all.true_function, noise_var, derive_seed(seed, {kNoise}));
  return carve_test(all, n_test, derive_seed(seed, {kSplit}));
}

double nonstationary_function(double x) {
  constexpr double pi = std::numbers::pi;
  return x < 0.0 ? std::sin(2.0 * pi * 1.5 * x) : std::sin(2.0 * pi * 15.0 * x);
}

TrainTest gen_nonstationary(Index n_train, Index n_test, double noise_var,
                            std::uint64_t seed) {
  check_sizes(n_train, n_test);
  check_noise(noise_var);
  Dataset all;
  all.inputs = grid(n_train + n_test);
  const Index n = all.inputs.rows();
  Vector f(n);
  std::vector<int> regime(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double x = all.inputs(i, 0);
    f(i) = nonstationary_function(x);
    regime[static_cast<std::size_t>(i)] = x < 0.0 ? 0 : 1;
  }
  all.true_function = f;
  all.labels = std::move(regime);
  all.outputs = add_noise(f, noise_var, derive_seed(seed, {kNoise}));
  return carve_test(all, n_test, derive_seed(seed, {kSplit}));
}

TrainTest gen_gmm_gp(Index n_train, Index n_test, Index input_dim, int n_components,
                     double gamma, double noise_var, std::uint64_t seed) {
  check_sizes(n_train, n_test);
  check_noise(noise_var);
  if (input_dim < 1 || n_components < 1) {
    throw InvalidArgument("input_dim and n_components must be positive");
  }
  if (!(gamma > 0.0)) {
    throw InvalidArgument("gamma must be positive");
  }
  const Index n = n_train + n_test;
  Rng rng(derive_seed(seed, {kInputs}));
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix means(n_components, input_dim);
  for (Index k = 0; k < means.rows(); ++k) {
    for (Index d = 0; d < input_dim; ++d) {
      means(k, d) = 5.0 * normal(rng);
    }
  }
  std::uniform_int_distribution<int> component(0, n_components - 1);
  Dataset all;
  all.inputs.resize(n, input_dim);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int k = component(rng);
    labels[static_cast<std::size_t>(i)] = k;
    for (Index d = 0; d < input_dim; ++d) {
      all.inputs(i, d) = means(k, d) + normal(rng);
    }
  }
  const auto hyper = KernelHyperparams::isotropic(1.0, gamma, 1.0);
  all.true_function = draw_gp(all.inputs, hyper, derive_seed(seed, {kLatent}));
  all.labels = std::move(labels);
  all.outputs = add_noise(*all.true_function, noise_var, derive_seed(seed, {kNoise}));
  return carve_test(all, n_test, derive_seed(seed, {kSplit}));
}

TrainTest split_dataset(const Dataset &data, double test_fraction, std::uint64_t seed) {
  data.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test_fraction must lie strictly between 0 and 1");
  }
  const Index n_test =
      static_cast<Index>(std::llround(test_fraction * static_cast<double>(data.size())));
  if (n_test < 1 || n_test >= data.size()) {
    throw InvalidArgument("test_fraction leaves an empty train or test part");
  }
  return carve_test(data, n_test, seed);
}

} // namespace ismoe
