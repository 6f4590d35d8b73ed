#pragma once

#include <ismoe/dataset.hpp>
#include <ismoe/gp.hpp>
#include <ismoe/hyperopt.hpp>
#include <ismoe/partition.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ismoe {

enum class Weighting { importance, uniform };
enum class Partitioner { gmm, random };

struct ISMOEConfig {
  int n_samples = 10;      // J
  int n_experts = 10;      // K
  Index minibatch = 0;     // B; 0 means B = N
  bool sa_enabled = true;  // likelihood ^ (N / B)
  bool shared_hyper = true;
  int n_sweeps = 2;
  std::uint64_t seed = 0;
  int n_workers = 1;
  double alpha = 2.0;
  bool ard = false;
  Weighting weighting = Weighting::importance;
  Partitioner partitioner = Partitioner::gmm;
  OptimConfig optim;
  // Defaults to NIWPrior::from_data on the full training inputs.
  std::optional<NIWPrior> niw;
  // Keep each sample's mean/variance in the result.
  bool keep_per_sample = true;

  Index batch_size(Index n) const { return minibatch == 0 ? n : minibatch; }
  // N / B when the stochastic approximation is on and B < N; otherwise 1.
  double likelihood_power(Index n) const;
  void validate(Index n) const;
};

struct ImportanceSample {
  int index = 0;
  int attempts = 1;
  std::uint64_t seed = 0;
  std::vector<Index> minibatch_indices;
  Partition partition;
  std::vector<ClusterStats> stats;
  MixturePrior prior;
  // experts[k] is set iff partition.counts[k] > 0.
  std::vector<std::optional<GPModel>> experts;
  std::vector<KernelHyperparams> hypers;
  double likelihood_power = 1.0;
  double log_weight_unnorm = 0.0;
};

struct PredictiveResult {
  Vector mean;
  Vector variance;
  // J x M, present when keep_per_sample is set.
  std::optional<Matrix> per_sample_means;
  std::optional<Matrix> per_sample_variances;
  Vector normalized_weights;
};

// Per test point and expert: membership probability, mean, variance. Empty
// experts have probability 0.
struct ExpertMixture {
  Matrix probs;
  Matrix means;
  Matrix variances;
};

struct RunDiagnostics {
  int n_failed = 0;
  std::vector<std::string> failures;
  double ess = 0.0;
  // Number of cross-sample synchronisation points.
  int aggregation_barriers = 0;
  std::vector<int> sample_indices;
  Vector log_weights;
};

struct RunResult {
  std::vector<ImportanceSample> samples;
  PredictiveResult prediction;
  RunDiagnostics diagnostics;
};

// Draws importance sample `sample_index`: minibatch, partition, expert
// hyperparameters, fitted experts and unnormalized log weight. Deterministic in
// (dataset, config, sample_index). A numerical failure is retried once with a
// perturbed seed before SampleError is thrown.
ImportanceSample draw_sample(const Dataset &dataset, const ISMOEConfig &config,
                             int sample_index);

// exp(lw - logsumexp(lw)).
Vector normalize_log_weights(std::span<const double> log_weights);

double effective_sample_size(const Vector &weights);

ExpertMixture sample_predict_components(const ImportanceSample &sample,
                                        const Matrix &Xstar);

// Moment-matches a Gaussian mixture per row: mean = sum_c p_c m_c and
// variance = sum_c p_c v_c + sum_c p_c (m_c - mean)^2. Arguments are M x C.
GaussianPrediction combine_moments(const Matrix &probs, const Matrix &means,
                                   const Matrix &variances);

// Moment-matched prediction of one sample's expert mixture.
GaussianPrediction sample_predict(const ImportanceSample &sample, const Matrix &Xstar);

// Runs all J samples on config.n_workers threads, then normalizes weights and
// combines predictions. Output does not depend on the worker count.
RunResult run(const Dataset &dataset, const ISMOEConfig &config, const Matrix &Xstar);

// Exact GP with hyperparameters optimized exactly as a single-expert, full
// batch sample would be.
struct ExactGPResult {
  GPModel model;
  OptimResult optim;
  GaussianPrediction prediction;
};
ExactGPResult fit_exact_gp(const Dataset &dataset, const OptimConfig &optim,
                           std::uint64_t seed, const Matrix &Xstar, bool ard = false);

// Seeds used by draw_sample: one per (sample, attempt), and from it one per
// expert for hyperparameter restarts (expert 0 when hyperparameters are shared).
std::uint64_t sample_seed(std::uint64_t run_seed, int sample_index, int attempt);
std::uint64_t hyper_seed(std::uint64_t sample_seed, int expert);

} // namespace ismoe
