#pragma once

#include "btlab/approx_ops.hpp"
#include "btlab/poincare.hpp"
#include "btlab/structure.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace btlab {

/// Raw sectioned key/value text. Lines are `[section]`, `key = value` or comments (#, ;).
/// Sections may repeat; keys within one section may not.
struct ScenarioText {
  struct Entry {
    std::string value;
    int line = 0;
  };
  struct Section {
    std::string name;
    int line = 0;
    std::map<std::string, Entry> keys;
  };
  std::string source;
  std::vector<Section> sections;

  /// Throws ConfigError("source:line: message").
  static ScenarioText parse(std::istream& in, std::string source);
  static ScenarioText load(const std::string& path);
};

enum class RunMode { Validate, GSweep, RSweep, ESweep, Poly, Poincare, Trace, All };
std::string to_string(RunMode m);

struct TraceSettings {
  std::vector<double> t_grid{-0.5, 0.0, 0.5};
  double phi_s = 1.5, phi_inner = 0.2, phi_outer = 1.0;  // radii as fractions of R
  double psi_s = 2.0, psi_inner = 0.4, psi_outer = 0.9;
  double outer = 2.0, cutoff_s = 1.5;                     // cutoff support as a multiple of R
  double alt_outer = 1.8, alt_cutoff_s = 1.6;
  int grid = 512, padding = 4, order_cap = 4;
};

struct PoincareSettings {
  int p = 0, q = 1;
  std::map<FormKey, std::string> coefficients;  // f given directly
  std::map<FormKey, std::string> primitive;     // f = 𝕃(primitive)
  int grid = 3;
};

struct Tolerances {
  double slope_max = -0.45;   // g-sweep fitted slope
  double e_final = 1e-4;      // e-sweep last sup error
  double poincare = 1e-3;     // residual at the largest τ
  double trace = 1e-5;        // consistency and λ-independence
};

/// A typed scenario. Expressions are kept as text (for the summary) and compiled.
struct Scenario {
  std::string source;
  std::string structure_name;
  StructureMap structure;
  DomainRadii radii;
  bool T_auto = true;
  double s = 2.0;
  std::optional<double> h;
  std::optional<double> chi_plateau, chi_support;

  std::string u_text;
  std::optional<SampledFunction> u;  // classical data
  DistributionData distribution;     // density and/or point functionals
  bool has_distribution = false;

  RunMode mode = RunMode::Validate;
  int mode_line = 0;
  std::vector<RunMode> sweeps{RunMode::GSweep, RunMode::RSweep, RunMode::ESweep};  // used by mode all
  std::vector<double> taus;
  std::vector<int> degrees{0, 2, 4, 6, 8, 10};
  std::string output_dir = "out";
  int grid = 9;
  int order_cap = 2;

  PoincareSettings poincare;
  TraceSettings trace;
  Tolerances tol;
};

/// Typed view of the text. Unknown sections or keys, bad numbers and bad expressions raise
/// ConfigError anchored at the offending line.
Scenario build_scenario(const ScenarioText& text);
Scenario load_scenario(const std::string& path);

/// Throws ConfigError (anchored at the mode line) if the scenario lacks the inputs `mode` needs.
/// For mode all only the sections that are present are run, so nothing is required.
void require_inputs(const Scenario& sc, RunMode mode);

}  // namespace btlab
