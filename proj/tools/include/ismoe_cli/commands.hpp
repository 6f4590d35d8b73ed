#pragma once

#include <ismoe/engine.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ismoe::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

// Every setting the commands understand. Each field is also a long flag and a
// key in the --config file (same name, without the leading dashes).
struct RunConfig {
  // Inputs and outputs.
  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path predictions;
  std::filesystem::path report;
  std::filesystem::path sweep_out;
  std::filesystem::path out_dir = ".";
  std::string prefix = "data";

  // generate
  std::string kind = "stationary";
  Index n_train = 1000;
  Index n_test = 100;
  // Unset: 15 for stationary data, 0.5 for gmm data.
  std::optional<double> gamma;
  double amplitude = 1.0;
  double noise_var = 1.0;
  Index input_dim = 2;
  int n_components = 4;

  // Engine, optimizer and mixture prior.
  ISMOEConfig engine;
  double niw_lambda = 1.0;
  // 0 selects D + 2.
  double niw_nu = 0.0;
  double niw_psi_scale = 1.0;

  // baseline-gp
  Index max_exact_n = 5000;
  bool allow_large = false;

  // sweep
  std::vector<int> grid_j{1, 5, 10};
  std::vector<int> grid_k{10};
  // 0 means B = N.
  std::vector<Index> grid_b{0};
  int repeats = 1;

  // ablate
  std::string mode = "is_sa";

  // Write measured wall-clock times. Off gives byte-stable outputs.
  bool timing = true;
};

struct GeneratedFiles {
  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path metadata;
};

GeneratedFiles cmd_generate(const RunConfig &config);
void cmd_fit_predict(const RunConfig &config);
void cmd_baseline_gp(const RunConfig &config);
void cmd_sweep(const RunConfig &config);
void cmd_ablate(const RunConfig &config);

// Applies an ablation mode to the engine settings.
ISMOEConfig ablation_config(const ISMOEConfig &base, const std::string &mode);

// Parses arguments, runs the selected command and maps failures to exit codes.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace ismoe::cli
