#pragma once

#include <ismoe/types.hpp>

namespace ismoe {

// Squared-exponential kernel hyperparameters, all stored as logs:
//
//   k(x, x') = nu * exp(-sum_d gamma_d * (x_d - x'_d)^2)
//
// with observation noise variance sigma^2 added on the diagonal. A length-1
// inverse-lengthscale vector is isotropic; length D is ARD.
struct KernelHyperparams {
  double log_amplitude = 0.0;
  Vector log_inv_lengthscale = Vector::Zero(1);
  double log_noise = 0.0;

  static KernelHyperparams isotropic(double amplitude, double inv_lengthscale,
                                     double noise_var);
  static KernelHyperparams ard(double amplitude, const Vector &inv_lengthscales,
                               double noise_var);

  double amplitude() const;
  double noise_var() const;
  bool is_ard() const { return log_inv_lengthscale.size() > 1; }

  // Per-dimension inverse lengthscales, broadcasting the isotropic value.
  Vector inv_lengthscales(Index dim) const;

  // Parameter vector layout: [log_amplitude, log_inv_lengthscale..., log_noise].
  Index n_params() const { return log_inv_lengthscale.size() + 2; }
  Vector to_vector() const;
  static KernelHyperparams from_vector(const Vector &theta);

  // Throws ShapeError/InvalidArgument when the hyperparameters cannot be used
  // with inputs of dimension `dim`.
  void validate(Index dim) const;

  bool operator==(const KernelHyperparams &other) const;
};

double kernel_value(const Eigen::Ref<const Vector> &x1,
                    const Eigen::Ref<const Vector> &x2,
                    const KernelHyperparams &hyper);

Matrix kernel_matrix(const Matrix &X1, const Matrix &X2,
                     const KernelHyperparams &hyper);

// Relative jitter schedule: the factored matrix is
//   nu * (C + j * I) + sigma^2 * I,
// with j starting at kJitterStart and multiplied by 10 on failure up to kJitterMax.
inline constexpr double kJitterStart = 1e-8;
inline constexpr double kJitterMax = 1e-2;

struct LogMarginal {
  double value = 0.0;
  // Gradient with respect to KernelHyperparams::to_vector().
  Vector gradient;
  double jitter = kJitterStart;
};

LogMarginal log_marginal_likelihood(const Matrix &X, const Vector &Y,
                                    const KernelHyperparams &hyper);

// Value only; skips the O(N^3) inverse needed for the gradient.
double log_marginal_value(const Matrix &X, const Vector &Y,
                          const KernelHyperparams &hyper);

struct GaussianPrediction {
  Vector mean;
  Vector variance;
};

// Exact GP conditioned on (inputs, targets). Immutable once fitted; safe to
// share between threads for prediction.
class GPModel {
public:
  const Matrix &inputs() const { return inputs_; }
  const Vector &targets() const { return targets_; }
  const KernelHyperparams &hyper() const { return hyper_; }
  // Lower-triangular factor of K + sigma^2 I + jitter.
  const Matrix &chol() const { return chol_; }
  const Vector &alpha() const { return alpha_; }
  double log_marginal() const { return log_marginal_; }
  double jitter() const { return jitter_; }
  int jitter_escalations() const { return jitter_escalations_; }
  Index size() const { return inputs_.rows(); }
  Index dim() const { return inputs_.cols(); }

  GaussianPrediction predict(const Matrix &Xstar) const;

private:
  friend GPModel gp_fit(Matrix X, Vector Y, const KernelHyperparams &hyper);

  Matrix inputs_;
  Vector targets_;
  KernelHyperparams hyper_;
  Matrix chol_;
  Vector alpha_;
  double log_marginal_ = 0.0;
  double jitter_ = kJitterStart;
  int jitter_escalations_ = 0;
};

GPModel gp_fit(Matrix X, Vector Y, const KernelHyperparams &hyper);

// Predictive mean and variance of noisy outputs at Xstar (variance includes
// sigma^2 and is never below it).
inline GaussianPrediction gp_predict(const GPModel &model, const Matrix &Xstar) {
  return model.predict(Xstar);
}

} // namespace ismoe
