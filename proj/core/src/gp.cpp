#include <ismoe/gp.hpp>

#include <ismoe/errors.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace ismoe {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

bool all_finite(const Vector &v) { return v.allFinite(); }

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = kJitterStart;
  int escalations = 0;
};

// Factor signal + (nu * j + sigma^2) I, escalating j on failure.
Factorization factor_covariance(const Matrix &signal, double amplitude,
                                double noise_var) {
  Factorization f;
  const Index n = signal.rows();
  for (double j = kJitterStart; j <= kJitterMax * (1.0 + 1e-9); j *= 10.0) {
    Matrix A = signal;
    A.diagonal().array() += amplitude * j + noise_var;
    f.llt.compute(A);
    f.jitter = j;
    if (f.llt.info() == Eigen::Success) {
      const auto diag = f.llt.matrixLLT().diagonal();
      bool ok = true;
      for (Index i = 0; i < n; ++i) {
        if (!(diag(i) > 0.0) || !std::isfinite(diag(i))) {
          ok = false;
          break;
        }
      }
      if (ok) {
        return f;
      }
    }
    ++f.escalations;
  }
  std::ostringstream msg;
  msg << "Cholesky factorization failed for " << n << "x" << n
      << " covariance after jitter escalation to " << kJitterMax << " * amplitude";
  throw NumericalError(msg.str(), kJitterMax);
}

void check_training_shapes(const Matrix &X, const Vector &Y,
                           const KernelHyperparams &hyper) {
  if (X.rows() < 1) {
    throw InvalidArgument("GP requires at least one training point");
  }
  if (Y.size() != X.rows()) {
    std::ostringstream msg;
    msg << "GP targets have " << Y.size() << " entries for " << X.rows()
        << " input rows";
    throw ShapeError(msg.str());
  }
  hyper.validate(X.cols());
}

double log_marginal_from(const Eigen::LLT<Matrix> &llt, const Vector &Y,
                         const Vector &alpha) {
  const double n = static_cast<double>(Y.size());
  const double log_det_half = llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * Y.dot(alpha) - log_det_half - 0.5 * n * kLog2Pi;
}

} // namespace

KernelHyperparams KernelHyperparams::isotropic(double amplitude,
                                               double inv_lengthscale,
                                               double noise_var) {
  KernelHyperparams h;
  h.log_amplitude = std::log(amplitude);
  h.log_inv_lengthscale = Vector::Constant(1, std::log(inv_lengthscale));
  h.log_noise = std::log(noise_var);
  return h;
}

KernelHyperparams KernelHyperparams::ard(double amplitude,
                                         const Vector &inv_lengthscales,
                                         double noise_var) {
  KernelHyperparams h;
  h.log_amplitude = std::log(amplitude);
  h.log_inv_lengthscale = inv_lengthscales.array().log().matrix();
  h.log_noise = std::log(noise_var);
  return h;
}

double KernelHyperparams::amplitude() const { return std::exp(log_amplitude); }

double KernelHyperparams::noise_var() const { return std::exp(log_noise); }

Vector KernelHyperparams::inv_lengthscales(Index dim) const {
  if (log_inv_lengthscale.size() == 1) {
    return Vector::Constant(dim, std::exp(log_inv_lengthscale(0)));
  }
  return log_inv_lengthscale.array().exp().matrix();
}

Vector KernelHyperparams::to_vector() const {
  Vector theta(n_params());
  theta(0) = log_amplitude;
  theta.segment(1, log_inv_lengthscale.size()) = log_inv_lengthscale;
  theta(theta.size() - 1) = log_noise;
  return theta;
}

KernelHyperparams KernelHyperparams::from_vector(const Vector &theta) {
  if (theta.size() < 3) {
    throw ShapeError("hyperparameter vector needs at least 3 entries");
  }
  KernelHyperparams h;
  h.log_amplitude = theta(0);
  h.log_inv_lengthscale = theta.segment(1, theta.size() - 2);
  h.log_noise = theta(theta.size() - 1);
  return h;
}

void KernelHyperparams::validate(Index dim) const {
  const Index n_ls = log_inv_lengthscale.size();
  if (n_ls != 1 && n_ls != dim) {
    std::ostringstream msg;
    msg << "inverse-lengthscale vector has length " << n_ls
        << "; expected 1 (isotropic) or " << dim << " (ARD)";
    throw ShapeError(msg.str());
  }
  if (!std::isfinite(log_amplitude) || !std::isfinite(log_noise) ||
      !all_finite(log_inv_lengthscale)) {
    throw InvalidArgument("kernel hyperparameters must be finite");
  }
  if (!(amplitude() > 0.0) || !(noise_var() > 0.0) ||
      !(log_inv_lengthscale.array().exp() > 0.0).all()) {
    throw InvalidArgument("kernel hyperparameters underflow to zero");
  }
}

bool KernelHyperparams::operator==(const KernelHyperparams &other) const {
  return log_amplitude == other.log_amplitude && log_noise == other.log_noise &&
         log_inv_lengthscale.size() == other.log_inv_lengthscale.size() &&
         log_inv_lengthscale == other.log_inv_lengthscale;
}

double kernel_value(const Eigen::Ref<const Vector> &x1,
                    const Eigen::Ref<const Vector> &x2,
                    const KernelHyperparams &hyper) {
  if (x1.size() != x2.size()) {
    throw ShapeError("kernel_value: input dimensions differ");
  }
  hyper.validate(x1.size());
  const Vector gamma = hyper.inv_lengthscales(x1.size());
  double r = 0.0;
  for (Index d = 0; d < x1.size(); ++d) {
    const double diff = x1(d) - x2(d);
    r += gamma(d) * diff * diff;
  }
  return hyper.amplitude() * std::exp(-r);
}

Matrix kernel_matrix(const Matrix &X1, const Matrix &X2,
                     const KernelHyperparams &hyper) {
  if (X1.cols() != X2.cols()) {
    throw ShapeError("kernel_matrix: input dimensions differ");
  }
  const Index dim = X1.cols();
  hyper.validate(dim);
  const Vector gamma = hyper.inv_lengthscales(dim);
  const double nu = hyper.amplitude();

  // Points as contiguous columns.
  const Matrix A = X1.transpose();
  const Matrix B = X2.transpose();
  const bool symmetric = (&X1 == &X2) || (X1.rows() == X2.rows() && X1 == X2);

  Matrix K(X1.rows(), X2.rows());
  for (Index j = 0; j < B.cols(); ++j) {
    const Index i_begin = symmetric ? j : 0;
    for (Index i = i_begin; i < A.cols(); ++i) {
      double r = 0.0;
      for (Index d = 0; d < dim; ++d) {
        const double diff = A(d, i) - B(d, j);
        r += gamma(d) * diff * diff;
      }
      K(i, j) = nu * std::exp(-r);
    }
  }
  if (symmetric) {
    K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
  }
  return K;
}

LogMarginal log_marginal_likelihood(const Matrix &X, const Vector &Y,
                                    const KernelHyperparams &hyper) {
  check_training_shapes(X, Y, hyper);
  const Index n = X.rows();
  const Index dim = X.cols();
  const double nu = hyper.amplitude();
  const double noise = hyper.noise_var();

  const Matrix Ks = kernel_matrix(X, X, hyper);
  const Factorization f = factor_covariance(Ks, nu, noise);
  const Vector alpha = f.llt.solve(Y);

  LogMarginal out;
  out.jitter = f.jitter;
  out.value = log_marginal_from(f.llt, Y, alpha);

  // d/dtheta = 0.5 * tr(W dK/dtheta), W = alpha alpha^T - K^{-1}.
  Matrix W = -f.llt.solve(Matrix::Identity(n, n));
  W.noalias() += alpha * alpha.transpose();

  out.gradient = Vector::Zero(hyper.n_params());
  const Index n_ls = hyper.log_inv_lengthscale.size();
  const Vector gamma = hyper.inv_lengthscales(dim);

  // Amplitude scales both the kernel and the relative jitter.
  out.gradient(0) = 0.5 * ((W.array() * Ks.array()).sum() + nu * f.jitter * W.trace());
  out.gradient(n_ls + 1) = 0.5 * noise * W.trace();

  const Matrix Xt = X.transpose();
  Vector acc = Vector::Zero(dim);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j + 1; i < n; ++i) {
      const double p = W(i, j) * Ks(i, j);
      for (Index d = 0; d < dim; ++d) {
        const double diff = Xt(d, i) - Xt(d, j);
        acc(d) += p * diff * diff;
      }
    }
  }
  // Off-diagonal pairs counted once above; the sum over (i, j) doubles them.
  if (n_ls == 1) {
    out.gradient(1) = -gamma(0) * acc.sum();
  } else {
    for (Index d = 0; d < dim; ++d) {
      out.gradient(1 + d) = -gamma(d) * acc(d);
    }
  }
  return out;
}

double log_marginal_value(const Matrix &X, const Vector &Y,
                          const KernelHyperparams &hyper) {
  check_training_shapes(X, Y, hyper);
  const Matrix Ks = kernel_matrix(X, X, hyper);
  const Factorization f = factor_covariance(Ks, hyper.amplitude(), hyper.noise_var());
  const Vector alpha = f.llt.solve(Y);
  return log_marginal_from(f.llt, Y, alpha);
}

GPModel gp_fit(Matrix X, Vector Y, const KernelHyperparams &hyper) {
  check_training_shapes(X, Y, hyper);
  const Matrix Ks = kernel_matrix(X, X, hyper);
  const Factorization f = factor_covariance(Ks, hyper.amplitude(), hyper.noise_var());

  GPModel model;
  model.alpha_ = f.llt.solve(Y);
  model.log_marginal_ = log_marginal_from(f.llt, Y, model.alpha_);
  model.chol_ = f.llt.matrixL();
  model.jitter_ = f.jitter;
  model.jitter_escalations_ = f.escalations;
  model.inputs_ = std::move(X);
  model.targets_ = std::move(Y);
  model.hyper_ = hyper;
  return model;
}

GaussianPrediction GPModel::predict(const Matrix &Xstar) const {
  if (Xstar.cols() != dim()) {
    std::ostringstream msg;
    msg << "prediction inputs have dimension " << Xstar.cols()
        << "; model was trained on dimension " << dim();
    throw ShapeError(msg.str());
  }
  const double nu = hyper_.amplitude();
  const double noise = hyper_.noise_var();

  const Matrix Kstar = kernel_matrix(inputs_, Xstar, hyper_);
  GaussianPrediction out;
  out.mean = Kstar.transpose() * alpha_;
  const Matrix V = chol_.triangularView<Eigen::Lower>().solve(Kstar);
  out.variance = (nu + noise - V.colwise().squaredNorm().array()).matrix();
  out.variance = out.variance.cwiseMax(noise);
  return out;
}

} // namespace ismoe
