#pragma once

#include "btlab/scenario.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace btlab {

enum ExitCode : int { kExitPass = 0, kExitValidation = 2, kExitNumeric = 3, kExitConfig = 4 };

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides [run] output_dir
  std::optional<int> threads;
  std::optional<int> grid;             // U-grid points per axis for sweeps, poly and poincare
  std::optional<int> order_cap;        // Gevrey-weighted error order in sweeps
  std::optional<RunMode> mode;         // overrides [run] mode
};

struct ValidationRecord {
  double R = 0.0;
  double worst_ratio = 0.0;
  bool lipschitz_ok = false;
  double T = 0.0;      // T used by the run
  double T_max = 0.0;  // largest sampled T satisfying the phase bound
  double min_phase = 0.0;
  bool ok = false;
  std::string message;
};

/// Lipschitz check on V̄ and phase check for T. A declared T may exceed the sampled
/// T_max by at most the bisection tolerance R/100.
ValidationRecord validate_scenario(const Scenario& sc);

struct RunOutcome {
  int exit_code = kExitPass;
  std::vector<std::string> files;  // written, relative to the output directory
  std::string output_dir;
};

/// Runs the scenario: validation first, then the selected mode(s). Writes CSVs and
/// summary.json into the output directory and one status line per step to `log`.
RunOutcome run_scenario(Scenario sc, const RunOptions& opt, std::ostream& log);

/// Prints a summary.json from a previous run as text; returns its recorded exit code,
/// or kExitConfig if the file is missing or malformed.
int print_report(const std::string& out_dir, std::ostream& os);

}  // namespace btlab
