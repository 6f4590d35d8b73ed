#pragma once

#include <ismoe/gp.hpp>
#include <ismoe/types.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ismoe {

struct LogBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct OptimConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  int n_restarts = 2;
  // Log-uniform restart draws.
  LogBounds log_amplitude_bounds{-4.605170185988091, 4.605170185988092};   // [0.01, 100]
  LogBounds log_inv_lengthscale_bounds{-2.302585092994046, 6.907755278982137}; // [0.1, 1000]
  LogBounds log_noise_bounds{-9.210340371976182, 2.302585092994046};       // [1e-4, 10]
  // Exponent on the likelihood (N/B under the stochastic approximation).
  double likelihood_power = 1.0;

  void validate() const;
};

// One (X_k, Y_k) block. Blocks with zero rows contribute nothing.
struct DataBlock {
  Matrix inputs;
  Vector targets;
};

struct StartDiagnostics {
  Vector initial_theta;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string message;
};

struct OptimResult {
  KernelHyperparams hyper;
  // likelihood_power * sum_k log p(Y_k | X_k, hyper) at `hyper`.
  double objective = 0.0;
  int chosen_start = 0;
  std::vector<StartDiagnostics> starts;
};

// Maximizes likelihood_power * log p(Y | X, h) from `init` plus
// config.n_restarts random starts drawn from `seed`. The best final objective
// wins; ties go to the earliest start. With fewer than two points the
// hyperparameters are not identifiable and `init` is returned unchanged.
OptimResult optimize_single(const Matrix &X, const Vector &Y,
                            const KernelHyperparams &init,
                            const OptimConfig &config, std::uint64_t seed);

// Same, for one hyperparameter set shared by all blocks.
OptimResult optimize_shared(std::span<const DataBlock> blocks,
                            const KernelHyperparams &init,
                            const OptimConfig &config, std::uint64_t seed);

// Data-scaled starting point: amplitude and noise each half the target
// variance, inverse lengthscale from the mean per-dimension input variance.
KernelHyperparams default_initial_hyper(const Matrix &X, const Vector &Y,
                                        bool ard = false);

} // namespace ismoe
