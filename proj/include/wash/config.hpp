#pragma once

#include "wash/params.hpp"
#include "wash/sde.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wash {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"critical-tilt", "heteroclinic",    "phase-portrait", "simulate",
                                                 "crossing-stats", "validate", "appendix-checks"};
  return names;
}

struct RunConfig {
  std::string command;

  double gamma = 0.1;
  double epsilon = 1e-4;
  double nu = 0.44;
  std::optional<double> dt;  // unset: min(1e-3, eta^2/4)
  double t_max = 0.0;        // 0: 200 ln(1/eps)/l+
  Scheme scheme = Scheme::Splitting;
  long n_trials = 10000;
  int k_max = 12;
  std::uint64_t master_seed = 1;
  int threads = 0;
  std::string output_dir = "out";

  // critical-tilt
  double tol_alpha = 1e-10;
  std::vector<double> gamma_list = {0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5};
  // heteroclinic / deterministic checks
  int orbit_grid = 4097;
  std::vector<double> eta_list = {1e-2, 3e-3, 1e-3};
  // simulate
  int trace_stride = 100;
  // validate
  std::vector<double> epsilon_list = {1e-3, 1e-4, 1e-5};
  long scan_trials = 2000;
  long ou_samples = 100000;
  // appendix-checks
  long ms_samples = 100000;
  std::vector<double> ms_lambdas = {3.0, 4.0};
  long comparison_paths = 1000;
  // phase-portrait
  int portrait_grid = 41;

  /// Step size used by the simulation: dt if set, else the derived rule.
  double resolved_dt(const ModelParams& m) const;
  SimSettings sim_settings(const ModelParams& m) const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown, duplicate or
/// unparsable keys are errors that name the line. When `command` is absent
/// from the text, `default_command` is used; an empty result is an error.
RunConfig parse_config(std::string_view text, std::string_view default_command = {});

/// Every key with its resolved value, one `key = value` per line.
std::string to_config_text(const RunConfig& c);

/// Key reference for --help.
std::string config_help();

}  // namespace wash
