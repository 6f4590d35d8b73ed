#pragma once

// Brute-force reference computations used only by tests. Nothing here calls
// into the library code paths it is used to check.

#include <ismoe/types.hpp>

#include <functional>
#include <map>
#include <vector>

namespace ismoe::oracle {

// k(x, x') evaluated directly from the closed form.
double se_kernel(const Vector &x1, const Vector &x2, double amplitude,
                 const Vector &inv_lengthscales);

// log N(Y | 0, K + noise I) via an explicitly formed inverse and determinant
// (LU); intended for small N.
double dense_log_marginal(const Matrix &X, const Vector &Y, double amplitude,
                          const Vector &inv_lengthscales, double noise_var,
                          double relative_jitter = 0.0);

// Same for N = 2 with the hand-written 2x2 inverse.
double log_marginal_2x2(const Matrix &X, const Vector &Y, double amplitude,
                        double inv_lengthscale, double noise_var);

// Central differences of f at theta with step h.
Vector central_difference(const std::function<double(const Vector &)> &f,
                          const Vector &theta, double h);

// Univariate Student-t log density with `dof`, location and squared scale.
double student_t_logpdf(double x, double dof, double loc, double scale2);

// log p(X) under a Gaussian with NIW(mu0, lambda, psi, nu) prior, from the
// ratio of normalising constants.
double niw_log_marginal(const Matrix &X, const Vector &mu0, double lambda,
                        const Matrix &psi, double nu);

// Exact collapsed posterior over all K^N labelings under a symmetric
// Dirichlet(alpha) x NIW mixture. Keys are assignment vectors.
std::map<std::vector<int>, double> enumerate_partition_posterior(
    const Matrix &X, int K, double alpha, const Vector &mu0, double lambda,
    const Matrix &psi, double nu);

double total_variation(const std::map<std::vector<int>, double> &p,
                       const std::map<std::vector<int>, double> &q);

// Adjusted Rand index between two labelings.
double adjusted_rand_index(const std::vector<int> &a, const std::vector<int> &b);

// Composite trapezoid rule.
double trapezoid(const std::function<double(double)> &f, double lo, double hi, int n);

} // namespace ismoe::oracle
