#include <ismoe/partition.hpp>

#include <ismoe/errors.hpp>
#include <ismoe/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ismoe {

namespace {

constexpr double kLogPi = 1.1447298858494002;

int sample_log_categorical(const Vector &log_weights, Rng &rng) {
  const double top = log_weights.maxCoeff();
  Vector w = (log_weights.array() - top).exp().matrix();
  const double total = w.sum();
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (Index k = 0; k < w.size(); ++k) {
    u -= w(k);
    if (u < 0.0) {
      return static_cast<int>(k);
    }
  }
  // Rounding can leave u marginally non-negative; take the last positive entry.
  for (Index k = w.size() - 1; k >= 0; --k) {
    if (w(k) > 0.0) {
      return static_cast<int>(k);
    }
  }
  return 0;
}

} // namespace

void NIWPrior::validate() const {
  const Index d = dim();
  if (d < 1) {
    throw InvalidArgument("NIW prior needs a non-empty mean vector");
  }
  if (psi.rows() != d || psi.cols() != d) {
    throw ShapeError("NIW scale matrix does not match the prior mean dimension");
  }
  if (!mu0.allFinite() || !psi.allFinite()) {
    throw InvalidArgument("NIW prior parameters must be finite");
  }
  if (!(lambda > 0.0)) {
    throw InvalidArgument("NIW lambda must be positive");
  }
  if (!(nu > static_cast<double>(d) - 1.0)) {
    throw InvalidArgument("NIW degrees of freedom must exceed D - 1");
  }
  const double scale = std::max(1.0, psi.cwiseAbs().maxCoeff());
  if ((psi - psi.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("NIW scale matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(psi, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidArgument("NIW scale matrix must be positive definite");
  }
}

NIWPrior NIWPrior::from_data(const Matrix &X) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw InvalidArgument("cannot build an NIW prior from an empty input matrix");
  }
  const Index n = X.rows();
  const Index d = X.cols();
  NIWPrior prior;
  prior.mu0 = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - prior.mu0.transpose();
  if (n >= 2) {
    prior.psi = centered.transpose() * centered / static_cast<double>(n - 1);
  } else {
    prior.psi = Matrix::Zero(d, d);
  }
  double trace = prior.psi.trace();
  if (!(trace > 0.0)) {
    prior.psi = Matrix::Identity(d, d);
    trace = static_cast<double>(d);
  }
  prior.psi.diagonal().array() += 1e-6 * trace / static_cast<double>(d);
  prior.lambda = 1.0;
  prior.nu = static_cast<double>(d) + 2.0;
  return prior;
}

void MixturePrior::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("Dirichlet concentration alpha must be positive");
  }
  if (n_clusters < 1) {
    throw InvalidArgument("number of clusters K must be at least 1");
  }
  niw.validate();
}

Partition Partition::from_assignments(std::vector<int> assignments, int n_clusters) {
  if (n_clusters < 1) {
    throw InvalidArgument("number of clusters K must be at least 1");
  }
  Partition p;
  p.counts.assign(static_cast<std::size_t>(n_clusters), 0);
  for (int z : assignments) {
    if (z < 0 || z >= n_clusters) {
      std::ostringstream msg;
      msg << "cluster label " << z << " outside [0, " << n_clusters << ")";
      throw InvalidArgument(msg.str());
    }
    ++p.counts[static_cast<std::size_t>(z)];
  }
  p.assignments = std::move(assignments);
  return p;
}

void Partition::validate() const {
  const Partition rebuilt = from_assignments(assignments, n_clusters());
  if (rebuilt.counts != counts) {
    throw InvalidArgument("partition counts disagree with its assignments");
  }
}

std::vector<std::vector<Index>> Partition::members() const {
  std::vector<std::vector<Index>> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out[k].reserve(static_cast<std::size_t>(counts[k]));
  }
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    out[static_cast<std::size_t>(assignments[i])].push_back(static_cast<Index>(i));
  }
  return out;
}

ClusterStats::ClusterStats(Index dim)
    : mean_(Vector::Zero(dim)), scatter_(Matrix::Zero(dim, dim)) {}

ClusterStats ClusterStats::from_rows(const Matrix &X, std::span<const Index> rows) {
  ClusterStats stats(X.cols());
  if (rows.empty()) {
    return stats;
  }
  stats.count_ = static_cast<Index>(rows.size());
  for (Index r : rows) {
    stats.mean_ += X.row(r).transpose();
  }
  stats.mean_ /= static_cast<double>(stats.count_);
  for (Index r : rows) {
    const Vector delta = X.row(r).transpose() - stats.mean_;
    stats.scatter_.noalias() += delta * delta.transpose();
  }
  return stats;
}

void ClusterStats::add(const Eigen::Ref<const Vector> &x) {
  const Vector delta = x - mean_;
  const double n_old = static_cast<double>(count_);
  ++count_;
  const double n_new = static_cast<double>(count_);
  mean_ += delta / n_new;
  scatter_.noalias() += (n_old / n_new) * delta * delta.transpose();
}

void ClusterStats::remove(const Eigen::Ref<const Vector> &x) {
  if (count_ <= 1) {
    count_ = 0;
    mean_.setZero();
    scatter_.setZero();
    return;
  }
  const double n_old = static_cast<double>(count_);
  --count_;
  const double n_new = static_cast<double>(count_);
  mean_ = (n_old * mean_ - x) / n_new;
  const Vector delta = x - mean_;
  scatter_.noalias() -= (n_new / n_old) * delta * delta.transpose();
}

std::vector<ClusterStats> cluster_stats(const Matrix &X, const Partition &partition) {
  if (partition.size() != X.rows()) {
    throw ShapeError("partition size does not match the number of input rows");
  }
  const auto members = partition.members();
  std::vector<ClusterStats> out;
  out.reserve(members.size());
  for (const auto &rows : members) {
    out.push_back(ClusterStats::from_rows(X, rows));
  }
  return out;
}

StudentTPredictive::StudentTPredictive(const ClusterStats &stats, const NIWPrior &prior) {
  const Index d = prior.dim();
  if (stats.dim() != d) {
    throw ShapeError("cluster statistics dimension does not match the NIW prior");
  }
  const double n = static_cast<double>(stats.count());
  const double lambda_n = prior.lambda + n;
  const double nu_n = prior.nu + n;
  location_ = (prior.lambda * prior.mu0 + n * stats.mean()) / lambda_n;

  Matrix psi_n = prior.psi;
  if (stats.count() > 0) {
    const Vector shift = stats.mean() - prior.mu0;
    psi_n += stats.scatter();
    psi_n.noalias() += (prior.lambda * n / lambda_n) * shift * shift.transpose();
  }
  dof_ = nu_n - static_cast<double>(d) + 1.0;
  const Matrix scale = psi_n * ((lambda_n + 1.0) / (lambda_n * dof_));

  Eigen::LLT<Matrix> llt(scale);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) {
    throw NumericalError("NIW posterior scale matrix is not positive definite");
  }
  scale_chol_ = llt.matrixL();
  const double dd = static_cast<double>(d);
  log_norm_ = std::lgamma(0.5 * (dof_ + dd)) - std::lgamma(0.5 * dof_) -
              0.5 * dd * (std::log(dof_) + kLogPi) -
              scale_chol_.diagonal().array().log().sum();
}

double StudentTPredictive::log_density(const Eigen::Ref<const Vector> &x) const {
  if (x.size() != location_.size()) {
    throw ShapeError("point dimension does not match the predictive");
  }
  const Vector z = scale_chol_.triangularView<Eigen::Lower>().solve(x - location_);
  const double d = static_cast<double>(location_.size());
  return log_norm_ - 0.5 * (dof_ + d) * std::log1p(z.squaredNorm() / dof_);
}

double niw_log_predictive(const Eigen::Ref<const Vector> &x, const ClusterStats &stats,
                          const NIWPrior &prior) {
  return StudentTPredictive(stats, prior).log_density(x);
}

Partition sample_partition(const Matrix &X, const MixturePrior &prior, int n_sweeps,
                           std::uint64_t seed) {
  prior.validate();
  const Index n = X.rows();
  const int K = prior.n_clusters;
  if (n < 1) {
    throw InvalidArgument("cannot partition an empty input matrix");
  }
  if (X.cols() != prior.niw.dim()) {
    throw ShapeError("input dimension does not match the NIW prior");
  }
  if (n_sweeps < 0) {
    throw InvalidArgument("number of Gibbs sweeps must be non-negative");
  }
  if (K == 1) {
    return Partition::from_assignments(std::vector<int>(static_cast<std::size_t>(n), 0), 1);
  }

  Rng rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<ClusterStats> stats(static_cast<std::size_t>(K), ClusterStats(X.cols()));
  std::vector<StudentTPredictive> predictive;
  predictive.reserve(stats.size());
  for (const auto &s : stats) {
    predictive.emplace_back(s, prior.niw);
  }
  std::vector<int> z(static_cast<std::size_t>(n), -1);
  Vector logp(K);
  const Matrix Xt = X.transpose();

  auto assign = [&](Index i) {
    const auto x = Xt.col(i);
    for (int k = 0; k < K; ++k) {
      logp(k) = std::log(static_cast<double>(stats[k].count()) + prior.alpha) +
                predictive[k].log_density(x);
    }
    const int k = sample_log_categorical(logp, rng);
    z[static_cast<std::size_t>(i)] = k;
    stats[k].add(x);
    predictive[k] = StudentTPredictive(stats[k], prior.niw);
  };

  for (Index i : order) {
    assign(i);
  }
  for (int sweep = 0; sweep < n_sweeps; ++sweep) {
    for (Index i : order) {
      const int old = z[static_cast<std::size_t>(i)];
      stats[old].remove(Xt.col(i));
      predictive[old] = StudentTPredictive(stats[old], prior.niw);
      assign(i);
    }
  }
  return Partition::from_assignments(std::move(z), K);
}

Partition random_partition(Index n_points, int n_clusters, std::uint64_t seed) {
  if (n_clusters < 1) {
    throw InvalidArgument("number of clusters K must be at least 1");
  }
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, n_clusters - 1);
  std::vector<int> z(static_cast<std::size_t>(n_points));
  for (auto &label : z) {
    label = pick(rng);
  }
  return Partition::from_assignments(std::move(z), n_clusters);
}

double log_sum_exp(const Eigen::Ref<const Vector> &v) {
  if (v.size() == 0) {
    return -std::numeric_limits<double>::infinity();
  }
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) {
    return top;
  }
  return top + std::log((v.array() - top).exp().sum());
}

Vector cluster_assign_log_probs(const Eigen::Ref<const Vector> &xstar,
                                std::span<const StudentTPredictive> predictives,
                                std::span<const Index> counts, double alpha) {
  if (predictives.size() != counts.size() || predictives.empty()) {
    throw ShapeError("cluster predictives and counts must be non-empty and aligned");
  }
  Vector out(static_cast<Index>(predictives.size()));
  for (std::size_t k = 0; k < predictives.size(); ++k) {
    out(static_cast<Index>(k)) = std::log(static_cast<double>(counts[k]) + alpha) +
                                 predictives[k].log_density(xstar);
  }
  out.array() -= log_sum_exp(out);
  return out;
}

Vector cluster_assign_log_probs(const Eigen::Ref<const Vector> &xstar,
                                const Partition &partition, const Matrix &X,
                                const MixturePrior &prior) {
  prior.validate();
  if (partition.n_clusters() != prior.n_clusters) {
    throw InvalidArgument("partition and prior disagree on the number of clusters");
  }
  const auto stats = cluster_stats(X, partition);
  std::vector<StudentTPredictive> predictives;
  predictives.reserve(stats.size());
  for (const auto &s : stats) {
    predictives.emplace_back(s, prior.niw);
  }
  return cluster_assign_log_probs(xstar, predictives, partition.counts, prior.alpha);
}

} // namespace ismoe
