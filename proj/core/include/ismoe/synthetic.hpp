#pragma once

#include <ismoe/dataset.hpp>

#include <cstdint>

namespace ismoe {

struct TrainTest {
  Dataset train;
  Dataset test;
};

// Largest joint grid we are willing to factor densely.
inline constexpr Index kMaxGeneratedPoints = 20000;

// Draws f ~ GP(0, amplitude * exp(-gamma d^2)) jointly on a linspace(-1, 1)
// grid of n_train + n_test points; test rows are a uniformly chosen subset of
// the grid. Outputs are f plus N(0, noise_var) noise.
TrainTest gen_stationary(Index n_train, Index n_test, double gamma, double amplitude,
                         double noise_var, std::uint64_t seed);

// Piecewise periodic function on the same grid: sin(3 pi x) for x < 0 and
// sin(30 pi x) for x >= 0. Labels hold the regime (0 slow, 1 fast).
TrainTest gen_nonstationary(Index n_train, Index n_test, double noise_var,
                            std::uint64_t seed);
double nonstationary_function(double x);

// Inputs from an equal-weight mixture of n_components unit-covariance
// Gaussians with means ~ N(0, 25 I); f ~ GP(0, exp(-gamma d^2)) drawn jointly
// on all sampled inputs. Labels hold the generating component.
TrainTest gen_gmm_gp(Index n_train, Index n_test, Index input_dim, int n_components,
                     double gamma, double noise_var, std::uint64_t seed);

// Uniform shuffle split; the test part has round(test_fraction * N) rows.
TrainTest split_dataset(const Dataset &data, double test_fraction, std::uint64_t seed);

} // namespace ismoe
