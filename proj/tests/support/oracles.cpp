#include "oracles.hpp"

#include <cmath>
#include <numbers>

namespace ismoe::oracle {

double se_kernel(const Vector &x1, const Vector &x2, double amplitude,
                 const Vector &inv_lengthscales) {
  double r = 0.0;
  for (Index d = 0; d < x1.size(); ++d) {
    const double g = inv_lengthscales.size() == 1 ? inv_lengthscales(0) : inv_lengthscales(d);
    r += g * (x1(d) - x2(d)) * (x1(d) - x2(d));
  }
  return amplitude * std::exp(-r);
}

double dense_log_marginal(const Matrix &X, const Vector &Y, double amplitude,
                          const Vector &inv_lengthscales, double noise_var,
                          double relative_jitter) {
  const Index n = X.rows();
  Matrix K(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      K(i, j) = se_kernel(X.row(i).transpose(), X.row(j).transpose(), amplitude,
                          inv_lengthscales);
    }
    K(i, i) += noise_var + amplitude * relative_jitter;
  }
  Eigen::FullPivLU<Matrix> lu(K);
  const Matrix inv = lu.inverse();
  const double logdet = std::log(lu.determinant());
  return -0.5 * Y.dot(inv * Y) - 0.5 * logdet -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

double log_marginal_2x2(const Matrix &X, const Vector &Y, double amplitude,
                        double inv_lengthscale, double noise_var) {
  const double d = X(0, 0) - X(1, 0);
  const double a = amplitude + noise_var;
  const double b = amplitude * std::exp(-inv_lengthscale * d * d);
  const double det = a * a - b * b;
  // [a b; b a]^{-1} = [a -b; -b a] / det
  const double quad = (a * Y(0) * Y(0) - 2.0 * b * Y(0) * Y(1) + a * Y(1) * Y(1)) / det;
  return -0.5 * quad - 0.5 * std::log(det) - std::log(2.0 * std::numbers::pi);
}

Vector central_difference(const std::function<double(const Vector &)> &f,
                          const Vector &theta, double h) {
  Vector g(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    Vector up = theta;
    Vector down = theta;
    up(i) += h;
    down(i) -= h;
    g(i) = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

double student_t_logpdf(double x, double dof, double loc, double scale2) {
  const double z = (x - loc) * (x - loc) / scale2;
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * std::numbers::pi * scale2) -
         0.5 * (dof + 1.0) * std::log(1.0 + z / dof);
}

namespace {

double log_multigamma(double a, Index d) {
  double out = 0.25 * static_cast<double>(d * (d - 1)) * std::log(std::numbers::pi);
  for (Index j = 0; j < d; ++j) {
    out += std::lgamma(a - 0.5 * static_cast<double>(j));
  }
  return out;
}

double log_det(const Matrix &A) { return std::log(Eigen::FullPivLU<Matrix>(A).determinant()); }

} // namespace

double niw_log_marginal(const Matrix &X, const Vector &mu0, double lambda,
                        const Matrix &psi, double nu) {
  const Index n = X.rows();
  const Index d = mu0.size();
  if (n == 0) {
    return 0.0;
  }
  const Vector xbar = X.colwise().mean().transpose();
  Matrix S = Matrix::Zero(d, d);
  for (Index i = 0; i < n; ++i) {
    const Vector r = X.row(i).transpose() - xbar;
    S += r * r.transpose();
  }
  const double nn = static_cast<double>(n);
  const double lambda_n = lambda + nn;
  const double nu_n = nu + nn;
  const Matrix psi_n =
      psi + S + (lambda * nn / lambda_n) * (xbar - mu0) * (xbar - mu0).transpose();
  const double dd = static_cast<double>(d);
  return -0.5 * nn * dd * std::log(std::numbers::pi) + log_multigamma(0.5 * nu_n, d) -
         log_multigamma(0.5 * nu, d) + 0.5 * nu * log_det(psi) - 0.5 * nu_n * log_det(psi_n) +
         0.5 * dd * (std::log(lambda) - std::log(lambda_n));
}

std::map<std::vector<int>, double> enumerate_partition_posterior(
    const Matrix &X, int K, double alpha, const Vector &mu0, double lambda,
    const Matrix &psi, double nu) {
  const Index n = X.rows();
  std::vector<int> z(static_cast<std::size_t>(n), 0);
  std::map<std::vector<int>, double> log_post;
  double top = -INFINITY;
  while (true) {
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (int v : z) {
      ++counts[static_cast<std::size_t>(v)];
    }
    double lp = std::lgamma(K * alpha) - std::lgamma(static_cast<double>(n) + K * alpha);
    for (int k = 0; k < K; ++k) {
      lp += std::lgamma(counts[static_cast<std::size_t>(k)] + alpha) - std::lgamma(alpha);
      Matrix Xk(counts[static_cast<std::size_t>(k)], X.cols());
      Index r = 0;
      for (Index i = 0; i < n; ++i) {
        if (z[static_cast<std::size_t>(i)] == k) {
          Xk.row(r++) = X.row(i);
        }
      }
      lp += niw_log_marginal(Xk, mu0, lambda, psi, nu);
    }
    log_post[z] = lp;
    top = std::max(top, lp);
    // Odometer increment over K^N labelings.
    Index pos = 0;
    while (pos < n && ++z[static_cast<std::size_t>(pos)] == K) {
      z[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == n) {
      break;
    }
  }
  double total = 0.0;
  for (auto &[key, v] : log_post) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto &[key, v] : log_post) {
    v /= total;
  }
  return log_post;
}

double total_variation(const std::map<std::vector<int>, double> &p,
                       const std::map<std::vector<int>, double> &q) {
  double tv = 0.0;
  for (const auto &[key, v] : p) {
    auto it = q.find(key);
    tv += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto &[key, v] : q) {
    if (!p.contains(key)) {
      tv += std::abs(v);
    }
  }
  return 0.5 * tv;
}

double adjusted_rand_index(const std::vector<int> &a, const std::vector<int> &b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ca;
  std::map<int, double> cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
  }
  auto c2 = [](double x) { return 0.5 * x * (x - 1.0); };
  double sum_joint = 0.0;
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto &[k, v] : joint) {
    sum_joint += c2(v);
  }
  for (const auto &[k, v] : ca) {
    sum_a += c2(v);
  }
  for (const auto &[k, v] : cb) {
    sum_b += c2(v);
  }
  const double total = c2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) {
    return 1.0;
  }
  return (sum_joint - expected) / (max_index - expected);
}

double trapezoid(const std::function<double(double)> &f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) {
    s += f(lo + i * h);
  }
  return s * h;
}

} // namespace ismoe::oracle
