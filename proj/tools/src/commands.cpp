#include <ismoe_cli/commands.hpp>

#include <ismoe/dataset.hpp>
#include <ismoe/errors.hpp>
#include <ismoe/metrics.hpp>
#include <ismoe/rng.hpp>
#include <ismoe/synthetic.hpp>

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <sstream>

namespace ismoe::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr double kZ975 = 1.959964;

void require_set(const fs::path &p, const char *flag) {
  if (p.empty()) {
    throw InvalidArgument(std::string("--") + flag + " is required for this command");
  }
}

void require_directory(const fs::path &dir) {
  const fs::path d = dir.empty() ? fs::path(".") : dir;
  if (!fs::is_directory(d)) {
    throw IoError("output directory '" + d.string() + "' does not exist");
  }
}

void require_parent(const fs::path &file) { require_directory(file.parent_path()); }

Dataset load(const fs::path &path) {
  Dataset d = read_csv(path);
  d.validate();
  return d;
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << text;
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

void write_json(const fs::path &path, const Json &j) { write_text(path, j.dump(2) + "\n"); }

void write_predictions(const fs::path &path, const Vector &mean, const Vector &variance) {
  std::ostringstream out;
  out << "index,mean,variance,lower95,upper95\n";
  for (Index i = 0; i < mean.size(); ++i) {
    const double half = kZ975 * std::sqrt(variance(i));
    out << i << ',' << format_double(mean(i)) << ',' << format_double(variance(i)) << ','
        << format_double(mean(i) - half) << ',' << format_double(mean(i) + half) << '\n';
  }
  write_text(path, out.str());
}

std::vector<double> to_std(const Vector &v) { return {v.data(), v.data() + v.size()}; }

const char *weighting_name(Weighting w) {
  return w == Weighting::importance ? "importance" : "uniform";
}

const char *partitioner_name(Partitioner p) { return p == Partitioner::gmm ? "gmm" : "random"; }

struct Loaded {
  Dataset train;
  Dataset test;
};

Loaded load_pair(const RunConfig &config) {
  require_set(config.train, "train");
  require_set(config.test, "test");
  Loaded l{load(config.train), load(config.test)};
  if (l.train.dim() != l.test.dim()) {
    throw ShapeError("train and test files have different input dimensions");
  }
  return l;
}

void require_outputs(const RunConfig &config) {
  require_set(config.predictions, "predictions");
  require_set(config.report, "report");
  require_parent(config.predictions);
  require_parent(config.report);
}

ISMOEConfig resolve_engine(const ISMOEConfig &base, const RunConfig &config,
                           const Dataset &train) {
  ISMOEConfig engine = base;
  NIWPrior niw = NIWPrior::from_data(train.inputs);
  niw.lambda = config.niw_lambda;
  if (config.niw_nu > 0.0) {
    niw.nu = config.niw_nu;
  }
  niw.psi *= config.niw_psi_scale;
  engine.niw = niw;
  engine.validate(train.size());
  return engine;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Json report_json(const std::string &command, const std::string &mode, const EvalReport &r,
                 Index n_train, Index n_test) {
  Json j;
  j["command"] = command;
  j["mode"] = mode;
  j["n_train"] = n_train;
  j["n_test"] = n_test;
  j["test_log_likelihood"] = r.test_log_likelihood;
  j["mse"] = r.mse;
  j["ess"] = r.ess;
  j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

struct IsmoeOutcome {
  RunResult result;
  EvalReport report;
};

IsmoeOutcome run_ismoe(const Dataset &train, const Dataset &test, const ISMOEConfig &engine,
                       bool timing) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result = run(train, engine, test.inputs);
  const double elapsed = timing ? seconds_since(t0) : 0.0;
  EvalReport report = evaluate(result.prediction.mean, result.prediction.variance, test.outputs,
                               result.diagnostics.ess, elapsed);
  return {std::move(result), std::move(report)};
}

Json ismoe_report(const std::string &command, const std::string &mode, const Dataset &train,
                  const Dataset &test, const ISMOEConfig &engine, const IsmoeOutcome &o) {
  const Index n = train.size();
  Json j = report_json(command, mode, o.report, n, test.size());
  j["exact_gp_equivalent"] =
      engine.n_experts == 1 && engine.n_samples == 1 && engine.batch_size(n) == n;
  Json settings;
  settings["n_samples"] = engine.n_samples;
  settings["n_experts"] = engine.n_experts;
  settings["minibatch"] = engine.batch_size(n);
  settings["sa_enabled"] = engine.sa_enabled;
  settings["likelihood_power"] = engine.likelihood_power(n);
  settings["shared_hyper"] = engine.shared_hyper;
  settings["weighting"] = weighting_name(engine.weighting);
  settings["partitioner"] = partitioner_name(engine.partitioner);
  settings["n_sweeps"] = engine.n_sweeps;
  settings["alpha"] = engine.alpha;
  settings["seed"] = engine.seed;
  j["settings"] = settings;
  const RunDiagnostics &d = o.result.diagnostics;
  j["n_failed"] = d.n_failed;
  j["failures"] = d.failures;
  j["sample_indices"] = d.sample_indices;
  j["weights"] = to_std(o.result.prediction.normalized_weights);
  j["log_weights"] = to_std(d.log_weights);
  int escalations = 0;
  for (const auto &s : o.result.samples) {
    for (const auto &e : s.experts) {
      escalations += e ? e->jitter_escalations() : 0;
    }
  }
  j["jitter_escalations"] = escalations;
  j["per_point_log_density"] = to_std(o.report.per_point_log_density);
  return j;
}

std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) {
    return s;
  }
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') {
      q += '"';
    }
    q += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return q + "\"";
}

} // namespace

GeneratedFiles cmd_generate(const RunConfig &config) {
  require_directory(config.out_dir);
  const std::uint64_t seed = config.engine.seed;
  TrainTest tt;
  Json meta;
  meta["kind"] = config.kind;
  meta["seed"] = seed;
  meta["n_train"] = config.n_train;
  meta["n_test"] = config.n_test;
  meta["noise_var"] = config.noise_var;
  if (config.kind == "stationary") {
    const double gamma = config.gamma.value_or(15.0);
    tt = gen_stationary(config.n_train, config.n_test, gamma, config.amplitude,
                        config.noise_var, seed);
    meta["gamma"] = gamma;
    meta["amplitude"] = config.amplitude;
  } else if (config.kind == "nonstationary") {
    tt = gen_nonstationary(config.n_train, config.n_test, config.noise_var, seed);
  } else if (config.kind == "gmm") {
    const double gamma = config.gamma.value_or(0.5);
    tt = gen_gmm_gp(config.n_train, config.n_test, config.input_dim, config.n_components, gamma,
                    config.noise_var, seed);
    meta["gamma"] = gamma;
    meta["input_dim"] = config.input_dim;
    meta["n_components"] = config.n_components;
  } else {
    throw InvalidArgument("unknown generator kind '" + config.kind +
                          "' (expected stationary, nonstationary or gmm)");
  }
  GeneratedFiles files{config.out_dir / (config.prefix + "_train.csv"),
                       config.out_dir / (config.prefix + "_test.csv"),
                       config.out_dir / (config.prefix + "_meta.json")};
  meta["train"] = files.train.filename().string();
  meta["test"] = files.test.filename().string();
  write_csv(tt.train, files.train);
  write_csv(tt.test, files.test);
  write_json(files.metadata, meta);
  return files;
}

void cmd_fit_predict(const RunConfig &config) {
  require_outputs(config);
  const Loaded data = load_pair(config);
  const ISMOEConfig engine = resolve_engine(config.engine, config, data.train);
  const IsmoeOutcome o = run_ismoe(data.train, data.test, engine, config.timing);
  write_predictions(config.predictions, o.result.prediction.mean, o.result.prediction.variance);
  write_json(config.report, ismoe_report("fit-predict", "ismoe", data.train, data.test, engine, o));
}

void cmd_baseline_gp(const RunConfig &config) {
  require_outputs(config);
  const Loaded data = load_pair(config);
  const Index n = data.train.size();
  if (n > config.max_exact_n && !config.allow_large) {
    std::ostringstream msg;
    msg << "exact GP on N = " << n << " points needs O(N^3) time and O(N^2) memory; the limit is "
        << config.max_exact_n << " (raise --max-exact-n or pass --allow-large)";
    throw InvalidArgument(msg.str());
  }
  config.engine.optim.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const ExactGPResult exact = fit_exact_gp(data.train, config.engine.optim, config.engine.seed,
                                           data.test.inputs, config.engine.ard);
  const double elapsed = config.timing ? seconds_since(t0) : 0.0;
  const EvalReport report = evaluate(exact.prediction.mean, exact.prediction.variance,
                                     data.test.outputs, 1.0, elapsed);
  Json j = report_json("baseline-gp", "exact_gp", report, n, data.test.size());
  j["exact_gp_equivalent"] = true;
  const KernelHyperparams &h = exact.model.hyper();
  Json hyper;
  hyper["amplitude"] = h.amplitude();
  hyper["inv_lengthscale"] = to_std(h.inv_lengthscales(data.train.dim()));
  hyper["noise_var"] = h.noise_var();
  j["hyperparameters"] = hyper;
  j["log_marginal"] = exact.model.log_marginal();
  j["chosen_start"] = exact.optim.chosen_start;
  j["n_failed"] = 0;
  j["failures"] = Json::array();
  j["weights"] = std::vector<double>{1.0};
  j["jitter_escalations"] = exact.model.jitter_escalations();
  j["per_point_log_density"] = to_std(report.per_point_log_density);
  write_predictions(config.predictions, exact.prediction.mean, exact.prediction.variance);
  write_json(config.report, j);
}

void cmd_sweep(const RunConfig &config) {
  require_set(config.sweep_out, "sweep-out");
  require_parent(config.sweep_out);
  if (config.grid_j.empty() || config.grid_k.empty() || config.grid_b.empty()) {
    throw InvalidArgument("sweep grid must have at least one value for J, K and B");
  }
  if (config.repeats < 1) {
    throw InvalidArgument("--repeats must be at least 1");
  }
  const Loaded data = load_pair(config);
  const Index n = data.train.size();

  std::ofstream out(config.sweep_out, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + config.sweep_out.string() + "' for writing");
  }
  out << "J,K,B,repeat,seed,status,test_log_likelihood,mse,ess,runtime_seconds,message\n";
  for (int j : config.grid_j) {
    for (int k : config.grid_k) {
      for (Index b : config.grid_b) {
        for (int r = 0; r < config.repeats; ++r) {
          ISMOEConfig base = config.engine;
          base.n_samples = j;
          base.n_experts = k;
          base.minibatch = b;
          // Same seed for every setting within a repeat, so settings are paired.
          base.seed = derive_seed(config.engine.seed, {static_cast<std::uint64_t>(r)});
          out << j << ',' << k << ',' << (b == 0 ? n : b) << ',' << r << ',' << base.seed << ',';
          try {
            const ISMOEConfig engine = resolve_engine(base, config, data.train);
            const IsmoeOutcome o = run_ismoe(data.train, data.test, engine, config.timing);
            out << "ok," << format_double(o.report.test_log_likelihood) << ','
                << format_double(o.report.mse) << ',' << format_double(o.report.ess) << ','
                << format_double(o.report.runtime_seconds) << ",\n";
          } catch (const Error &e) {
            out << "error,,,,," << csv_field(e.what()) << '\n';
          }
          out.flush();
        }
      }
    }
  }
  if (!out) {
    throw IoError("write failed for '" + config.sweep_out.string() + "'");
  }
}

ISMOEConfig ablation_config(const ISMOEConfig &base, const std::string &mode) {
  ISMOEConfig c = base;
  if (mode == "is_sa" || mode == "gmm") {
    c.weighting = Weighting::importance;
    c.sa_enabled = true;
    c.partitioner = Partitioner::gmm;
  } else if (mode == "is_nosa") {
    c.weighting = Weighting::importance;
    c.sa_enabled = false;
  } else if (mode == "unif_sa") {
    c.weighting = Weighting::uniform;
    c.sa_enabled = true;
  } else if (mode == "unif_nosa") {
    c.weighting = Weighting::uniform;
    c.sa_enabled = false;
  } else if (mode == "random_partition") {
    c.weighting = Weighting::importance;
    c.sa_enabled = true;
    c.partitioner = Partitioner::random;
  } else {
    throw InvalidArgument("unknown ablation mode '" + mode +
                          "' (expected is_sa, is_nosa, unif_sa, unif_nosa, gmm or "
                          "random_partition)");
  }
  return c;
}

void cmd_ablate(const RunConfig &config) {
  require_outputs(config);
  const ISMOEConfig variant = ablation_config(config.engine, config.mode);
  const Loaded data = load_pair(config);
  const ISMOEConfig engine = resolve_engine(variant, config, data.train);
  const IsmoeOutcome o = run_ismoe(data.train, data.test, engine, config.timing);
  write_predictions(config.predictions, o.result.prediction.mean, o.result.prediction.variance);
  write_json(config.report, ismoe_report("ablate", config.mode, data.train, data.test, engine, o));
}

} // namespace ismoe::cli
