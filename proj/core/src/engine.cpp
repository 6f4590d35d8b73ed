#include <ismoe/engine.hpp>

#include <ismoe/errors.hpp>
#include <ismoe/rng.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace ismoe {

namespace {

enum Stream : std::uint64_t { kMinibatch = 11, kPartition = 12, kHyper = 13 };

std::vector<Index> draw_minibatch(Index n, Index b, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (b == n) {
    return idx;
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first b slots are a uniform draw without replacement.
  for (Index i = 0; i < b; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(b));
  std::sort(idx.begin(), idx.end());
  return idx;
}

DataBlock gather(const Matrix &X, const Vector &Y, std::span<const Index> rows) {
  DataBlock block;
  block.inputs.resize(static_cast<Index>(rows.size()), X.cols());
  block.targets.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    block.inputs.row(static_cast<Index>(i)) = X.row(rows[i]);
    block.targets(static_cast<Index>(i)) = Y(rows[i]);
  }
  return block;
}

ImportanceSample draw_attempt(const Dataset &dataset, const ISMOEConfig &config,
                              const NIWPrior &niw, int sample_index, int attempt) {
  const Index n = dataset.size();
  const Index b = config.batch_size(n);
  const int K = config.n_experts;

  ImportanceSample sample;
  sample.index = sample_index;
  sample.attempts = attempt + 1;
  sample.seed = sample_seed(config.seed, sample_index, attempt);
  sample.likelihood_power = config.likelihood_power(n);
  sample.prior.alpha = config.alpha;
  sample.prior.n_clusters = K;
  sample.prior.niw = niw;

  sample.minibatch_indices = draw_minibatch(n, b, derive_seed(sample.seed, {kMinibatch}));
  const DataBlock batch = gather(dataset.inputs, dataset.outputs, sample.minibatch_indices);

  const std::uint64_t partition_seed = derive_seed(sample.seed, {kPartition});
  sample.partition = config.partitioner == Partitioner::gmm
                         ? sample_partition(batch.inputs, sample.prior, config.n_sweeps,
                                            partition_seed)
                         : random_partition(b, K, partition_seed);
  sample.stats = cluster_stats(batch.inputs, sample.partition);

  const auto members = sample.partition.members();
  std::vector<DataBlock> blocks;
  blocks.reserve(members.size());
  for (const auto &rows : members) {
    blocks.push_back(gather(batch.inputs, batch.targets, rows));
  }

  OptimConfig optim = config.optim;
  optim.likelihood_power = sample.likelihood_power;

  sample.hypers.assign(static_cast<std::size_t>(K), KernelHyperparams{});
  if (config.shared_hyper) {
    const KernelHyperparams init =
        default_initial_hyper(batch.inputs, batch.targets, config.ard);
    const OptimResult fit =
        optimize_shared(blocks, init, optim, hyper_seed(sample.seed, 0));
    std::fill(sample.hypers.begin(), sample.hypers.end(), fit.hyper);
  } else {
    for (int k = 0; k < K; ++k) {
      const DataBlock &block = blocks[static_cast<std::size_t>(k)];
      if (block.inputs.rows() == 0) {
        sample.hypers[k] = default_initial_hyper(batch.inputs, batch.targets, config.ard);
        continue;
      }
      // Too few points to estimate spread locally: fall back to the batch scale.
      const KernelHyperparams init =
          block.inputs.rows() >= 2
              ? default_initial_hyper(block.inputs, block.targets, config.ard)
              : default_initial_hyper(batch.inputs, batch.targets, config.ard);
      sample.hypers[k] =
          optimize_single(block.inputs, block.targets, init, optim, hyper_seed(sample.seed, k))
              .hyper;
    }
  }

  sample.experts.resize(static_cast<std::size_t>(K));
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    DataBlock &block = blocks[static_cast<std::size_t>(k)];
    if (block.inputs.rows() == 0) {
      continue;
    }
    sample.experts[k] =
        gp_fit(std::move(block.inputs), std::move(block.targets), sample.hypers[k]);
    total += sample.experts[k]->log_marginal();
  }
  sample.log_weight_unnorm = sample.likelihood_power * total;
  if (!std::isfinite(sample.log_weight_unnorm)) {
    throw NumericalError("importance weight is not finite");
  }
  return sample;
}

NIWPrior resolve_niw(const Dataset &dataset, const ISMOEConfig &config) {
  return config.niw ? *config.niw : NIWPrior::from_data(dataset.inputs);
}

struct TaskOutcome {
  std::optional<ImportanceSample> sample;
  GaussianPrediction prediction;
  std::string error;
};

} // namespace

std::uint64_t sample_seed(std::uint64_t run_seed, int sample_index, int attempt) {
  return derive_seed(run_seed, {static_cast<std::uint64_t>(sample_index),
                                static_cast<std::uint64_t>(attempt)});
}

std::uint64_t hyper_seed(std::uint64_t sample_seed, int expert) {
  return derive_seed(sample_seed, {kHyper, static_cast<std::uint64_t>(expert)});
}

double ISMOEConfig::likelihood_power(Index n) const {
  const Index b = batch_size(n);
  if (!sa_enabled || b >= n) {
    return 1.0;
  }
  return static_cast<double>(n) / static_cast<double>(b);
}

void ISMOEConfig::validate(Index n) const {
  if (n_samples < 1) {
    throw InvalidArgument("J (number of importance samples) must be at least 1");
  }
  if (n_experts < 1) {
    throw InvalidArgument("K (number of experts) must be at least 1");
  }
  if (minibatch < 0 || minibatch > n) {
    std::ostringstream msg;
    msg << "B (minibatch size) must lie in [1, N = " << n << "], got " << minibatch;
    throw InvalidArgument(msg.str());
  }
  if (n_sweeps < 0) {
    throw InvalidArgument("number of Gibbs sweeps must be non-negative");
  }
  if (n_workers < 1) {
    throw InvalidArgument("number of workers must be positive");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("Dirichlet concentration alpha must be positive");
  }
  if (niw) {
    niw->validate();
  }
  OptimConfig probe = optim;
  probe.likelihood_power = 1.0;
  probe.validate();
}

ImportanceSample draw_sample(const Dataset &dataset, const ISMOEConfig &config,
                             int sample_index) {
  dataset.validate();
  config.validate(dataset.size());
  const NIWPrior niw = resolve_niw(dataset, config);
  std::string first_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return draw_attempt(dataset, config, niw, sample_index, attempt);
    } catch (const NumericalError &e) {
      if (attempt == 0) {
        first_error = e.what();
      } else {
        std::ostringstream msg;
        msg << "importance sample " << sample_index << " failed twice: " << first_error
            << "; retry: " << e.what();
        throw SampleError(msg.str(), sample_index);
      }
    }
  }
  throw SampleError("unreachable", sample_index);
}

Vector normalize_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) {
    throw InvalidArgument("cannot normalize an empty set of log weights");
  }
  const Eigen::Map<const Vector> lw(log_weights.data(),
                                    static_cast<Index>(log_weights.size()));
  if (!lw.allFinite()) {
    throw InvalidArgument("log weights must be finite");
  }
  const double lse = log_sum_exp(lw);
  return (lw.array() - lse).exp().matrix();
}

double effective_sample_size(const Vector &weights) {
  return 1.0 / weights.squaredNorm();
}

ExpertMixture sample_predict_components(const ImportanceSample &sample,
                                        const Matrix &Xstar) {
  const Index m = Xstar.rows();
  const Index K = static_cast<Index>(sample.experts.size());
  ExpertMixture out;
  out.probs = Matrix::Zero(m, K);
  out.means = Matrix::Zero(m, K);
  out.variances = Matrix::Zero(m, K);

  std::vector<Index> active;
  std::vector<StudentTPredictive> predictives;
  std::vector<Index> counts;
  for (Index k = 0; k < K; ++k) {
    if (!sample.experts[static_cast<std::size_t>(k)]) {
      continue;
    }
    active.push_back(k);
    predictives.emplace_back(sample.stats[static_cast<std::size_t>(k)], sample.prior.niw);
    counts.push_back(sample.partition.counts[static_cast<std::size_t>(k)]);
  }
  if (active.empty()) {
    throw InvalidArgument("importance sample has no fitted experts");
  }

  for (Index k : active) {
    const GaussianPrediction p = sample.experts[static_cast<std::size_t>(k)]->predict(Xstar);
    out.means.col(k) = p.mean;
    out.variances.col(k) = p.variance;
  }
  const Matrix Xt = Xstar.transpose();
  for (Index i = 0; i < m; ++i) {
    const Vector logp =
        cluster_assign_log_probs(Xt.col(i), predictives, counts, sample.prior.alpha);
    for (std::size_t a = 0; a < active.size(); ++a) {
      out.probs(i, active[a]) = std::exp(logp(static_cast<Index>(a)));
    }
  }
  return out;
}

GaussianPrediction combine_moments(const Matrix &probs, const Matrix &means,
                                   const Matrix &variances) {
  if (means.rows() != probs.rows() || means.cols() != probs.cols() ||
      variances.rows() != probs.rows() || variances.cols() != probs.cols()) {
    throw ShapeError("mixture probabilities, means and variances differ in shape");
  }
  const Index m = probs.rows();
  GaussianPrediction out;
  out.mean.resize(m);
  out.variance.resize(m);
  for (Index i = 0; i < m; ++i) {
    const auto p = probs.row(i);
    const double mean = p.dot(means.row(i));
    // Centered form keeps the spread term nonnegative.
    const double spread = (p.array() * (means.row(i).array() - mean).square()).sum();
    out.mean(i) = mean;
    out.variance(i) = p.dot(variances.row(i)) + spread;
  }
  return out;
}

GaussianPrediction sample_predict(const ImportanceSample &sample, const Matrix &Xstar) {
  const ExpertMixture mix = sample_predict_components(sample, Xstar);
  return combine_moments(mix.probs, mix.means, mix.variances);
}

RunResult run(const Dataset &dataset, const ISMOEConfig &config, const Matrix &Xstar) {
  dataset.validate();
  config.validate(dataset.size());
  if (Xstar.cols() != dataset.dim()) {
    throw ShapeError("test inputs do not match the training input dimension");
  }

  ISMOEConfig resolved = config;
  resolved.niw = resolve_niw(dataset, config);

  const int J = config.n_samples;
  std::vector<TaskOutcome> outcomes(static_cast<std::size_t>(J));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int j = next.fetch_add(1); j < J; j = next.fetch_add(1)) {
      TaskOutcome &slot = outcomes[static_cast<std::size_t>(j)];
      try {
        ImportanceSample sample = draw_sample(dataset, resolved, j);
        slot.prediction = sample_predict(sample, Xstar);
        slot.sample = std::move(sample);
      } catch (const std::exception &e) {
        slot.error = e.what();
      }
    }
  };

  const int n_threads = std::max(1, std::min(config.n_workers, J));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back(worker);
    }
  }

  // Single aggregation point: everything below sees all samples.
  RunResult result;
  result.diagnostics.aggregation_barriers = 1;
  std::vector<double> log_weights;
  for (int j = 0; j < J; ++j) {
    TaskOutcome &slot = outcomes[static_cast<std::size_t>(j)];
    if (!slot.sample) {
      ++result.diagnostics.n_failed;
      result.diagnostics.failures.push_back(slot.error);
      continue;
    }
    log_weights.push_back(slot.sample->log_weight_unnorm);
    result.diagnostics.sample_indices.push_back(j);
  }
  if (2 * result.diagnostics.n_failed > J) {
    std::ostringstream msg;
    msg << result.diagnostics.n_failed << " of " << J << " importance samples failed";
    if (!result.diagnostics.failures.empty()) {
      msg << "; first failure: " << result.diagnostics.failures.front();
    }
    throw SampleError(msg.str(), -1);
  }

  const Index n_ok = static_cast<Index>(log_weights.size());
  Vector weights;
  if (config.weighting == Weighting::importance) {
    weights = normalize_log_weights(log_weights);
  } else {
    weights = Vector::Constant(n_ok, 1.0 / static_cast<double>(n_ok));
  }
  result.diagnostics.log_weights =
      Eigen::Map<const Vector>(log_weights.data(), n_ok);
  result.diagnostics.ess = effective_sample_size(weights);

  const Index m = Xstar.rows();
  Matrix means(n_ok, m);
  Matrix variances(n_ok, m);
  Index row = 0;
  for (auto &slot : outcomes) {
    if (!slot.sample) {
      continue;
    }
    means.row(row) = slot.prediction.mean.transpose();
    variances.row(row) = slot.prediction.variance.transpose();
    result.samples.push_back(std::move(*slot.sample));
    ++row;
  }

  PredictiveResult &pred = result.prediction;
  pred.normalized_weights = weights;
  GaussianPrediction combined =
      combine_moments(weights.transpose().replicate(m, 1), means.transpose(),
                      variances.transpose());
  pred.mean = std::move(combined.mean);
  pred.variance = std::move(combined.variance);
  if (config.keep_per_sample) {
    pred.per_sample_means = std::move(means);
    pred.per_sample_variances = std::move(variances);
  }
  return result;
}

ExactGPResult fit_exact_gp(const Dataset &dataset, const OptimConfig &optim,
                           std::uint64_t seed, const Matrix &Xstar, bool ard) {
  dataset.validate();
  const KernelHyperparams init = default_initial_hyper(dataset.inputs, dataset.outputs, ard);
  OptimResult fit = optimize_single(dataset.inputs, dataset.outputs, init, optim, seed);
  GPModel model = gp_fit(dataset.inputs, dataset.outputs, fit.hyper);
  GaussianPrediction prediction = model.predict(Xstar);
  return {std::move(model), std::move(fit), std::move(prediction)};
}

} // namespace ismoe
