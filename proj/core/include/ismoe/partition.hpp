#pragma once

#include <ismoe/types.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace ismoe {

// Normal-Inverse-Wishart prior over a Gaussian component's (mean, covariance).
struct NIWPrior {
  Vector mu0;
  double lambda = 1.0;
  Matrix psi;
  double nu = 3.0;

  Index dim() const { return mu0.size(); }
  void validate() const;

  // mu0 = empirical mean, lambda = 1, psi = empirical covariance loaded by
  // 1e-6 * trace / D on the diagonal, nu = D + 2.
  static NIWPrior from_data(const Matrix &X);
};

// Symmetric Dirichlet(alpha) over K mixture weights plus the NIW base measure.
struct MixturePrior {
  double alpha = 2.0;
  int n_clusters = 1;
  NIWPrior niw;

  void validate() const;
};

struct Partition {
  std::vector<int> assignments;
  std::vector<Index> counts;

  int n_clusters() const { return static_cast<int>(counts.size()); }
  Index size() const { return static_cast<Index>(assignments.size()); }

  // Builds counts from assignments; throws if any label is outside [0, K).
  static Partition from_assignments(std::vector<int> assignments, int n_clusters);
  void validate() const;

  // Row indices assigned to each cluster, in increasing order.
  std::vector<std::vector<Index>> members() const;

  bool operator==(const Partition &) const = default;
};

// Count, sum and centered scatter of the points in one cluster, updated in
// O(D^2) per added/removed point.
class ClusterStats {
public:
  explicit ClusterStats(Index dim = 0);

  static ClusterStats from_rows(const Matrix &X, std::span<const Index> rows);

  void add(const Eigen::Ref<const Vector> &x);
  // Caller guarantees x was previously added.
  void remove(const Eigen::Ref<const Vector> &x);

  Index count() const { return count_; }
  Index dim() const { return mean_.size(); }
  Vector sum() const { return static_cast<double>(count_) * mean_; }
  const Vector &mean() const { return mean_; }
  // sum_i (x_i - mean)(x_i - mean)^T
  const Matrix &scatter() const { return scatter_; }

private:
  Index count_ = 0;
  Vector mean_;
  Matrix scatter_;
};

std::vector<ClusterStats> cluster_stats(const Matrix &X, const Partition &partition);

// Multivariate Student-t posterior predictive of the NIW model after
// observing the cluster's points. An empty cluster gives the prior predictive.
double niw_log_predictive(const Eigen::Ref<const Vector> &x,
                          const ClusterStats &stats, const NIWPrior &prior);

// Predictive density in factored form, for evaluating many points against one
// cluster without refactoring.
class StudentTPredictive {
public:
  StudentTPredictive(const ClusterStats &stats, const NIWPrior &prior);
  double log_density(const Eigen::Ref<const Vector> &x) const;

  double dof() const { return dof_; }
  const Vector &location() const { return location_; }
  // Lower Cholesky factor of the scale matrix.
  const Matrix &scale_chol() const { return scale_chol_; }

private:
  double dof_ = 0.0;
  Vector location_;
  Matrix scale_chol_;
  double log_norm_ = 0.0;
};

// One particle of a sequential collapsed sampler targeting P(Z | X):
// visits a seeded random permutation of the rows, assigning each with
// probability proportional to (count_k + alpha) * predictive_k(x_i), then runs
// n_sweeps collapsed Gibbs sweeps.
Partition sample_partition(const Matrix &X, const MixturePrior &prior,
                           int n_sweeps, std::uint64_t seed);

// Uniform random labels in [0, K), independent per point.
Partition random_partition(Index n_points, int n_clusters, std::uint64_t seed);

// Normalized log P(z* = k | x*, X, Z).
Vector cluster_assign_log_probs(const Eigen::Ref<const Vector> &xstar,
                                const Partition &partition, const Matrix &X,
                                const MixturePrior &prior);

// Same, from precomputed per-cluster predictives and counts.
Vector cluster_assign_log_probs(const Eigen::Ref<const Vector> &xstar,
                                std::span<const StudentTPredictive> predictives,
                                std::span<const Index> counts, double alpha);

double log_sum_exp(const Eigen::Ref<const Vector> &v);

} // namespace ismoe
