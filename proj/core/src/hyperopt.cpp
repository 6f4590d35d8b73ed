#include <ismoe/hyperopt.hpp>

#include <ismoe/errors.hpp>
#include <ismoe/lbfgs.hpp>
#include <ismoe/rng.hpp>

#include <cmath>
#include <sstream>

namespace ismoe {

namespace {

void check_bounds(const LogBounds &b, const char *name) {
  if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper)) {
    std::ostringstream msg;
    msg << "restart bounds for " << name << " must be finite with lower < upper";
    throw InvalidArgument(msg.str());
  }
}

double draw(Rng &rng, const LogBounds &b) {
  return std::uniform_real_distribution<double>(b.lower, b.upper)(rng);
}

class BlockObjective {
public:
  BlockObjective(std::span<const DataBlock> blocks, double power, Index n_ls)
      : blocks_(blocks), power_(power), n_ls_(n_ls) {}

  // Negated, scaled objective for minimization.
  double operator()(const Vector &theta, Vector &grad) const {
    const KernelHyperparams h = KernelHyperparams::from_vector(theta);
    double total = 0.0;
    grad = Vector::Zero(theta.size());
    for (const auto &block : blocks_) {
      if (block.inputs.rows() == 0) {
        continue;
      }
      const LogMarginal lm = log_marginal_likelihood(block.inputs, block.targets, h);
      total += lm.value;
      grad += lm.gradient;
    }
    grad *= -power_;
    return -power_ * total;
  }

  double value(const KernelHyperparams &h) const {
    double total = 0.0;
    for (const auto &block : blocks_) {
      if (block.inputs.rows() > 0) {
        total += log_marginal_value(block.inputs, block.targets, h);
      }
    }
    return power_ * total;
  }

  Index n_ls() const { return n_ls_; }

private:
  std::span<const DataBlock> blocks_;
  double power_;
  Index n_ls_;
};

} // namespace

void OptimConfig::validate() const {
  if (max_iterations < 1) {
    throw InvalidArgument("max_iterations must be positive");
  }
  if (!(gradient_tolerance > 0.0)) {
    throw InvalidArgument("gradient_tolerance must be positive");
  }
  if (n_restarts < 0) {
    throw InvalidArgument("n_restarts must be non-negative");
  }
  if (!(likelihood_power >= 1.0) || !std::isfinite(likelihood_power)) {
    throw InvalidArgument("likelihood_power must be finite and >= 1");
  }
  check_bounds(log_amplitude_bounds, "log amplitude");
  check_bounds(log_inv_lengthscale_bounds, "log inverse lengthscale");
  check_bounds(log_noise_bounds, "log noise");
}

OptimResult optimize_shared(std::span<const DataBlock> blocks,
                            const KernelHyperparams &init,
                            const OptimConfig &config, std::uint64_t seed) {
  config.validate();
  Index dim = -1;
  Index largest = 0;
  for (const auto &block : blocks) {
    if (block.targets.size() != block.inputs.rows()) {
      throw ShapeError("data block has mismatched input rows and targets");
    }
    if (block.inputs.rows() == 0) {
      continue;
    }
    if (dim >= 0 && block.inputs.cols() != dim) {
      throw ShapeError("data blocks have different input dimensions");
    }
    dim = block.inputs.cols();
    largest = std::max(largest, block.inputs.rows());
  }
  if (dim < 0) {
    throw InvalidArgument("hyperparameter optimization needs a non-empty block");
  }
  init.validate(dim);

  const Index n_ls = init.log_inv_lengthscale.size();
  BlockObjective objective(blocks, config.likelihood_power, n_ls);

  OptimResult result;
  result.hyper = init;
  if (largest < 2) {
    result.objective = objective.value(init);
    return result;
  }

  LbfgsOptions options;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;

  Rng rng(seed);
  std::vector<Vector> starts{init.to_vector()};
  for (int r = 0; r < config.n_restarts; ++r) {
    Vector theta(init.n_params());
    theta(0) = draw(rng, config.log_amplitude_bounds);
    for (Index d = 0; d < n_ls; ++d) {
      theta(1 + d) = draw(rng, config.log_inv_lengthscale_bounds);
    }
    theta(n_ls + 1) = draw(rng, config.log_noise_bounds);
    starts.push_back(std::move(theta));
  }

  const GradientObjective fn = [&objective](const Vector &x, Vector &g) {
    return objective(x, g);
  };

  bool have_best = false;
  std::vector<std::string> failures;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    StartDiagnostics diag;
    diag.initial_theta = starts[s];
    try {
      Vector g;
      diag.initial_objective = -objective(starts[s], g);
      const LbfgsResult run = lbfgs_minimize(fn, starts[s], options);
      diag.final_objective = -run.f;
      diag.iterations = run.iterations;
      diag.converged = run.converged;
      diag.message = run.status;
      if (!have_best || diag.final_objective > result.objective) {
        have_best = true;
        result.objective = diag.final_objective;
        result.hyper = KernelHyperparams::from_vector(run.x);
        result.chosen_start = static_cast<int>(s);
      }
    } catch (const NumericalError &e) {
      diag.failed = true;
      diag.message = e.what();
      std::ostringstream line;
      line << "start " << s << ": " << e.what();
      failures.push_back(line.str());
    }
    result.starts.push_back(std::move(diag));
  }
  if (!have_best) {
    throw OptimizationError("all hyperparameter optimization starts failed",
                            std::move(failures));
  }
  return result;
}

OptimResult optimize_single(const Matrix &X, const Vector &Y,
                            const KernelHyperparams &init,
                            const OptimConfig &config, std::uint64_t seed) {
  const DataBlock block{X, Y};
  return optimize_shared(std::span<const DataBlock>(&block, 1), init, config, seed);
}

KernelHyperparams default_initial_hyper(const Matrix &X, const Vector &Y, bool ard) {
  const Index n = X.rows();
  const Index dim = X.cols();
  double var_y = 1.0;
  if (n >= 2) {
    const double mean = Y.mean();
    const double v = (Y.array() - mean).square().sum() / static_cast<double>(n - 1);
    if (std::isfinite(v) && v > 1e-12) {
      var_y = v;
    }
  }
  Vector var_x = Vector::Ones(std::max<Index>(dim, 1));
  if (n >= 2) {
    for (Index d = 0; d < dim; ++d) {
      const double m = X.col(d).mean();
      const double v = (X.col(d).array() - m).square().sum() / static_cast<double>(n - 1);
      var_x(d) = (std::isfinite(v) && v > 1e-12) ? v : 1.0;
    }
  }
  if (ard && dim > 1) {
    return KernelHyperparams::ard(0.5 * var_y, var_x.cwiseInverse(), 0.5 * var_y);
  }
  return KernelHyperparams::isotropic(0.5 * var_y, 1.0 / var_x.mean(), 0.5 * var_y);
}

} // namespace ismoe
