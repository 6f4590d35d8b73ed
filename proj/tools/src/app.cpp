#include <ismoe_cli/commands.hpp>

#include <ismoe/errors.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <thread>

namespace ismoe::cli {

namespace {

LogBounds log_range(const std::vector<double> &r, const char *flag) {
  if (r.size() != 2 || !(r[0] > 0.0) || !(r[1] > r[0]) || !std::isfinite(r[1])) {
    throw InvalidArgument(std::string("--") + flag +
                          " needs two positive values with lower < upper");
  }
  return {std::log(r[0]), std::log(r[1])};
}

int parse_workers(const std::string &text) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != text.size() || value < 1) {
    throw InvalidArgument("ISMOE_WORKERS must be a positive integer, got '" + text + "'");
  }
  return value;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  RunConfig config;
  config.engine.n_workers =
      std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  std::vector<double> amplitude_range{0.01, 100.0};
  std::vector<double> inv_lengthscale_range{0.1, 1000.0};
  std::vector<double> noise_range{1e-4, 10.0};
  double gamma = 0.0;

  CLI::App app{"Importance-sampled mixture of Gaussian process experts", "ismoe"};
  app.set_config("--config", "", "Flat 'key = value' file; keys are the long flag names");
  app.allow_config_extras(false);
  app.fallthrough();
  app.require_subcommand(1);

  const std::string io = "Files";
  app.add_option("--train", config.train, "Training CSV (x0,...,x{D-1},y)")->group(io);
  app.add_option("--test", config.test, "Test CSV")->group(io);
  app.add_option("--predictions", config.predictions, "Predictions CSV to write")->group(io);
  app.add_option("--report", config.report, "Report JSON to write")->group(io);
  app.add_option("--sweep-out", config.sweep_out, "Sweep CSV to write")->group(io);
  app.add_option("--out-dir", config.out_dir, "Directory for generated data")
      ->capture_default_str()
      ->group(io);
  app.add_option("--prefix", config.prefix, "File name prefix for generated data")
      ->capture_default_str()
      ->group(io);

  const std::string gen = "Generator";
  app.add_option("--n-train", config.n_train)->capture_default_str()->group(gen);
  app.add_option("--n-test", config.n_test)->capture_default_str()->group(gen);
  auto *gamma_opt =
      app.add_option("--gamma", gamma, "Inverse squared lengthscale (stationary 15, gmm 0.5)")
          ->check(CLI::PositiveNumber)
          ->group(gen);
  app.add_option("--amplitude", config.amplitude)->capture_default_str()->group(gen);
  app.add_option("--noise-var", config.noise_var)->capture_default_str()->group(gen);
  app.add_option("--input-dim", config.input_dim)->capture_default_str()->group(gen);
  app.add_option("--n-components", config.n_components)->capture_default_str()->group(gen);

  const std::string eng = "IS-MOE";
  ISMOEConfig &e = config.engine;
  app.add_option("-J,--n-samples", e.n_samples, "Importance samples")
      ->capture_default_str()
      ->group(eng);
  app.add_option("-K,--n-experts", e.n_experts, "Experts per sample")
      ->capture_default_str()
      ->group(eng);
  app.add_option("-B,--minibatch", e.minibatch, "Minibatch size (0 = all data)")
      ->capture_default_str()
      ->group(eng);
  app.add_flag("--sa,!--no-sa", e.sa_enabled, "Scale likelihood by N/B")->group(eng);
  app.add_flag("--shared-hyper,!--per-expert-hyper", e.shared_hyper,
               "One hyperparameter set per sample")
      ->group(eng);
  app.add_option("--n-sweeps", e.n_sweeps)->capture_default_str()->group(eng);
  app.add_option("--seed", e.seed)->capture_default_str()->group(eng);
  auto *workers_opt = app.add_option("--workers", e.n_workers, "Worker threads (env ISMOE_WORKERS)")
                          ->check(CLI::PositiveNumber)
                          ->group(eng);
  app.add_option("--alpha", e.alpha, "Dirichlet concentration")
      ->capture_default_str()
      ->group(eng);
  app.add_flag("--ard", e.ard, "Per-dimension lengthscales")->group(eng);
  const std::map<std::string, Weighting> weightings{{"importance", Weighting::importance},
                                                    {"uniform", Weighting::uniform}};
  app.add_option("--weighting", e.weighting)
      ->transform(CLI::CheckedTransformer(weightings, CLI::ignore_case))
      ->group(eng);
  const std::map<std::string, Partitioner> partitioners{{"gmm", Partitioner::gmm},
                                                        {"random", Partitioner::random}};
  app.add_option("--partitioner", e.partitioner)
      ->transform(CLI::CheckedTransformer(partitioners, CLI::ignore_case))
      ->group(eng);
  app.add_option("--niw-lambda", config.niw_lambda)->capture_default_str()->group(eng);
  app.add_option("--niw-nu", config.niw_nu, "0 selects D + 2")->capture_default_str()->group(eng);
  app.add_option("--niw-psi-scale", config.niw_psi_scale, "Multiplier on the data covariance")
      ->capture_default_str()
      ->group(eng);

  const std::string opt = "Optimizer";
  app.add_option("--max-iterations", e.optim.max_iterations)->capture_default_str()->group(opt);
  app.add_option("--gradient-tolerance", e.optim.gradient_tolerance)
      ->capture_default_str()
      ->group(opt);
  app.add_option("--n-restarts", e.optim.n_restarts)->capture_default_str()->group(opt);
  app.add_option("--amplitude-range", amplitude_range, "Restart draws for the amplitude")
      ->expected(2)
      ->group(opt);
  app.add_option("--inv-lengthscale-range", inv_lengthscale_range,
                 "Restart draws for the inverse lengthscale")
      ->expected(2)
      ->group(opt);
  app.add_option("--noise-range", noise_range, "Restart draws for the noise variance")
      ->expected(2)
      ->group(opt);

  const std::string other = "Other";
  app.add_option("--max-exact-n", config.max_exact_n, "Size guard for baseline-gp")
      ->capture_default_str()
      ->group(other);
  app.add_flag("--allow-large", config.allow_large, "Bypass the baseline-gp size guard")
      ->group(other);
  app.add_option("--grid-j", config.grid_j)->delimiter(',')->group(other);
  app.add_option("--grid-k", config.grid_k)->delimiter(',')->group(other);
  app.add_option("--grid-b", config.grid_b, "0 = all data")->delimiter(',')->group(other);
  app.add_option("--repeats", config.repeats)->capture_default_str()->group(other);
  app.add_flag("--timing,!--no-timing", config.timing, "Record wall-clock times")->group(other);

  auto *generate = app.add_subcommand("generate", "Write synthetic train/test CSVs");
  generate->add_option("kind", config.kind, "stationary, nonstationary or gmm")->required();
  auto *fit = app.add_subcommand("fit-predict", "Run IS-MOE and write predictions");
  auto *baseline = app.add_subcommand("baseline-gp", "Exact GP with optimized hyperparameters");
  auto *sweep = app.add_subcommand("sweep", "Grid over J, K and B");
  auto *ablate = app.add_subcommand("ablate", "Weighting and partitioning variants");
  ablate
      ->add_option("mode", config.mode,
                   "is_sa, is_nosa, unif_sa, unif_nosa, gmm or random_partition")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError &ex) {
    err << "error: " << ex.what() << '\n';
    return kExitIo;
  } catch (const CLI::ParseError &ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (workers_opt->count() == 0) {
      if (const char *env = std::getenv("ISMOE_WORKERS"); env != nullptr && *env != '\0') {
        e.n_workers = parse_workers(env);
      }
    }
    if (gamma_opt->count() > 0) {
      config.gamma = gamma;
    }
    e.optim.log_amplitude_bounds = log_range(amplitude_range, "amplitude-range");
    e.optim.log_inv_lengthscale_bounds =
        log_range(inv_lengthscale_range, "inv-lengthscale-range");
    e.optim.log_noise_bounds = log_range(noise_range, "noise-range");

    if (generate->parsed()) {
      const GeneratedFiles files = cmd_generate(config);
      out << "wrote " << files.train.string() << ", " << files.test.string() << ", "
          << files.metadata.string() << '\n';
    } else if (fit->parsed()) {
      cmd_fit_predict(config);
      out << "wrote " << config.predictions.string() << ", " << config.report.string() << '\n';
    } else if (baseline->parsed()) {
      cmd_baseline_gp(config);
      out << "wrote " << config.predictions.string() << ", " << config.report.string() << '\n';
    } else if (sweep->parsed()) {
      cmd_sweep(config);
      out << "wrote " << config.sweep_out.string() << '\n';
    } else if (ablate->parsed()) {
      cmd_ablate(config);
      out << "wrote " << config.predictions.string() << ", " << config.report.string() << '\n';
    }
  } catch (const IoError &ex) {
    err << "error: " << ex.what() << '\n';
    return kExitIo;
  } catch (const InvalidArgument &ex) {
    err << "error: " << ex.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError &ex) {
    err << "error: " << ex.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error &ex) {
    err << "error: " << ex.what() << '\n';
    return kExitIo;
  } catch (const std::exception &ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUnexpected;
  }
  return kExitOk;
}

} // namespace ismoe::cli
