#include "btlab/runner.hpp"

#include "btlab/errors.hpp"
#include "btlab/gevrey.hpp"
#include "btlab/parallel.hpp"
#include "btlab/trace.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace btlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no infinities; they are stored as null.
ordered_json jnum(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : os_(path, std::ios::binary) {
    if (!os_) throw NumericError("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

 private:
  std::ofstream os_;
};

std::string key_label(const FormKey& k) {
  auto join = [](const IndexSet& s) {
    std::string out;
    for (int j : s.entries()) out += (out.empty() ? "" : ";") + std::to_string(j);
    return out;
  };
  return "[" + join(k.I) + "|" + join(k.J) + "]";
}

std::string beta_label(const MultiIndex& b) {
  std::string out;
  for (std::size_t i = 0; i < b.dim(); ++i) out += (i ? ";" : "") + std::to_string(b[i]);
  return out;
}

struct Step {
  std::string name;
  bool pass = false;
  ordered_json data;
};

class Runner {
 public:
  Runner(Scenario sc, fs::path dir, RunOutcome& out) : sc_(std::move(sc)), dir_(std::move(dir)), out_(out) {}

  ApproxConfig config(double tau) const {
    return make_config(sc_.structure, sc_.radii, tau, sc_.s, sc_.chi_plateau, sc_.chi_support);
  }

  Csv csv(const std::string& name, const std::vector<std::string>& header) {
    out_.files.push_back(name);
    return Csv(dir_ / name, header);
  }

  Step sweep(RunMode mode) {
    const SweepMode sm = mode == RunMode::GSweep   ? SweepMode::G_to_chi_u
                         : mode == RunMode::RSweep ? SweepMode::R_decay
                                                   : SweepMode::E_to_u;
    const auto rep = convergence_sweep(*sc_.u, config(sc_.taus.front()), sc_.taus, sm,
                                       SweepOptions{sc_.grid, sc_.order_cap, sc_.h});
    auto out = csv(to_string(mode) + ".csv", {"tau", "sup_error", "gevrey_error", "bound_value"});
    for (std::size_t i = 0; i < rep.tau_grid.size(); ++i)
      out.row({fmt(rep.tau_grid[i]), fmt(rep.sup_errors[i]), fmt(rep.gevrey_errors[i]), fmt(rep.bound_values[i])});

    bool pass = rep.bound_dominates;
    ordered_json d;
    d["tau"] = rep.tau_grid;
    d["grid_points"] = rep.grid_points;
    d["bound_dominates"] = rep.bound_dominates;
    d["strictly_decreasing"] = rep.strictly_decreasing;
    d["final_sup_error"] = jnum(rep.sup_errors.back());
    if (mode == RunMode::GSweep) {
      d["fitted_slope"] = jnum(rep.fitted_slope);
      d["slope_max"] = sc_.tol.slope_max;
      pass = pass && rep.fitted_slope <= sc_.tol.slope_max;
    } else if (mode == RunMode::RSweep) {
      d["fitted_exp_rate"] = jnum(rep.fitted_exp_rate);
      pass = pass && rep.strictly_decreasing && rep.fitted_exp_rate < 0.0;
    } else {
      d["e_final"] = sc_.tol.e_final;
      pass = pass && rep.sup_errors.back() <= sc_.tol.e_final;
    }
    d["flags"] = rep.flags;
    return {to_string(mode), pass, d};
  }

  Step poly() {
    const auto grid = U_grid(sc_.structure, sc_.radii, sc_.grid);
    auto out = csv("poly.csv", {"tau", "degree", "sup_deviation", "tail_bound"});
    bool below = true, monotone = true;
    for (double tau : sc_.taus) {
      const auto cfg = config(tau);
      std::vector<Complex> E(grid.size());
      parallel_for(grid.size(), [&](std::size_t i) {
        E[i] = sc_.u ? E_tau(*sc_.u, cfg, Point(grid[i])) : E_tau(sc_.distribution, cfg, Point(grid[i]));
      });
      double prev = INFINITY;
      for (int D : sc_.degrees) {
        const auto P = sc_.u ? polynomial_approximant(*sc_.u, cfg, D) : polynomial_approximant(sc_.distribution, cfg, D);
        double dev = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
          dev = std::max(dev, std::abs(P(sc_.structure.Z(Point(grid[i]))) - E[i]));
        out.row({fmt(tau), std::to_string(D), fmt(dev), fmt(P.tail_bound)});
        below = below && dev <= P.tail_bound;
        monotone = monotone && dev <= prev;
        prev = dev;
      }
    }
    ordered_json d;
    d["degrees"] = sc_.degrees;
    d["below_tail_bound"] = below;
    d["monotone_in_degree"] = monotone;
    return {"poly", below, d};
  }

  Step poincare() {
    const StructureMap& S = sc_.structure;
    const auto& P = sc_.poincare;
    FormPQ f(S.m(), S.n(), P.p, P.q);
    if (!P.coefficients.empty()) {
      for (const auto& [k, text] : P.coefficients) f.set(k.I, k.J, structure_function(S, text));
    } else {
      if (P.q < 1) throw ParameterError("primitive keys need q >= 1");
      FormPQ g(S.m(), S.n(), P.p, P.q - 1);
      for (const auto& [k, text] : P.primitive) g.set(k.I, k.J, structure_function(S, text));
      f = L_operator(g, S);
    }
    const auto rep = approximate_solve(f, config(sc_.taus.front()), sc_.taus, P.grid);

    std::vector<FormKey> keys;
    for (const auto& [k, c] : f.coefficients()) keys.push_back(k);
    std::vector<std::string> header{"tau", "residual"};
    for (const auto& k : keys) header.push_back("residual" + key_label(k));
    auto out = csv("poincare.csv", header);
    bool decreasing = true;
    for (std::size_t i = 0; i < rep.tau_grid.size(); ++i) {
      std::vector<std::string> row{fmt(rep.tau_grid[i]), fmt(rep.residuals[i])};
      for (const auto& k : keys) {
        auto it = rep.per_coefficient[i].find(k);
        row.push_back(fmt(it == rep.per_coefficient[i].end() ? 0.0 : it->second));
      }
      out.row(row);
      // Residuals at roundoff level no longer need to shrink.
      if (i > 0 && !(rep.residuals[i] < rep.residuals[i - 1] || rep.residuals[i] <= 1e-12)) decreasing = false;
    }
    ordered_json d;
    d["p"] = P.p;
    d["q"] = P.q;
    d["grid_points"] = rep.grid_points;
    d["closedness"] = jnum(rep.closedness);
    d["strictly_decreasing"] = decreasing;
    d["final_residual"] = jnum(rep.residuals.back());
    d["tolerance"] = sc_.tol.poincare;
    return {"poincare", decreasing && rep.residuals.back() <= sc_.tol.poincare, d};
  }

  Step trace() {
    const StructureMap& S = sc_.structure;
    const auto& T = sc_.trace;
    const double R = sc_.radii.R;
    const auto cutoff = make_cutoff(S.m(), S.n(), R, T.outer * R, T.cutoff_s, T.grid, T.padding);
    const auto other = make_cutoff(S.m(), S.n(), R, T.alt_outer * R, T.alt_cutoff_s, T.grid, T.padding);
    const auto phi = gevrey_bump(T.phi_s, T.phi_inner * R, T.phi_outer * R, S.m());
    const auto psi = gevrey_bump(T.psi_s, T.psi_inner * R, T.psi_outer * R, S.n());

    std::vector<std::vector<double>> ts;
    for (double t : T.t_grid) ts.push_back(std::vector<double>(static_cast<std::size_t>(S.n()), t));

    const TracePairing a(fourier_of(sc_.distribution, cutoff), cutoff, phi);
    const TracePairing b(fourier_of(sc_.distribution, other), other, phi);
    auto out = csv("trace.csv", {"t", "re", "im", "tail", "alt_re", "alt_im", "alt_tail"});
    double spread = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const MultiIndex zero(static_cast<std::size_t>(S.n()));
      double ta = 0.0, tb = 0.0;
      const Complex va = a.evaluate(Point(ts[i]), zero, &ta);
      const Complex vb = b.evaluate(Point(ts[i]), zero, &tb);
      spread = std::max(spread, std::abs(va - vb));
      out.row({fmt(T.t_grid[i]), fmt(va.real()), fmt(va.imag()), fmt(ta), fmt(vb.real()), fmt(vb.imag()), fmt(tb)});
    }

    const auto reg = trace_t_regularity(sc_.distribution, cutoff, phi, ts, T.order_cap, sc_.s);
    auto rout = csv("trace_regularity.csv", {"t", "beta", "re", "im", "tail", "bound"});
    for (std::size_t i = 0; i < reg.t_grid.size(); ++i)
      for (std::size_t k = 0; k < reg.orders.size(); ++k) {
        const int order = reg.orders[k].order();
        const double bound = reg.C * std::pow(reg.b, order) * std::pow(std::tgamma(order + 1.0), reg.s);
        rout.row({fmt(T.t_grid[i]), beta_label(reg.orders[k]), fmt(reg.derivatives[i][k].real()),
                  fmt(reg.derivatives[i][k].imag()), fmt(reg.tails[i][k]), fmt(bound)});
      }

    const auto cons = trace_consistency(sc_.distribution, cutoff, other, phi, psi);
    ordered_json d;
    d["lambda_spread"] = jnum(std::max(spread, cons.lambda_spread));
    d["consistency_residual"] = jnum(cons.residual);
    d["direct_pairing"] = {jnum(cons.direct.real()), jnum(cons.direct.imag())};
    d["C"] = jnum(reg.C);
    d["b"] = jnum(reg.b);
    d["worst_ratio"] = jnum(reg.worst_ratio);
    d["gevrey_certificate"] = reg.gevrey_certificate;
    d["tolerance"] = sc_.tol.trace;
    const bool pass = std::max(spread, cons.lambda_spread) <= sc_.tol.trace && cons.residual <= sc_.tol.trace &&
                      reg.gevrey_certificate;
    return {"trace", pass, d};
  }

 private:
  Scenario sc_;
  fs::path dir_;
  RunOutcome& out_;
};

int classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const PreconditionError*>(&e) || dynamic_cast<const CapabilityError*>(&e))
    return kExitConfig;
  return kExitNumeric;
}

}  // namespace

ValidationRecord validate_scenario(const Scenario& sc) {
  ValidationRecord v;
  v.R = sc.radii.R;
  const auto lip = validate_lipschitz(sc.structure, sc.radii.R);
  v.worst_ratio = lip.worst_ratio;
  v.lipschitz_ok = lip.ok;
  if (!lip.ok) {
    v.message = "Lipschitz bound fails on V: worst_ratio " + fmt(lip.worst_ratio) + " > 0.5";
    return v;
  }
  try {
    const auto ft = find_T(sc.structure, sc.radii.R);
    v.T_max = ft.T;
    v.min_phase = ft.min_phase;
  } catch (const InfeasibilityError& e) {
    v.message = e.what();
    return v;
  }
  v.T = sc.T_auto ? v.T_max : sc.radii.T;
  if (v.T > v.T_max + sc.radii.R / 100) {
    v.message = "declared T " + fmt(v.T) + " exceeds the sampled phase bound T_max " + fmt(v.T_max);
    return v;
  }
  v.ok = true;
  return v;
}

RunOutcome run_scenario(Scenario sc, const RunOptions& opt, std::ostream& log) {
  RunOutcome out;
  if (opt.out_dir) sc.output_dir = *opt.out_dir;
  if (opt.threads) set_thread_count(*opt.threads);
  if (opt.grid) sc.grid = sc.poincare.grid = *opt.grid;
  if (opt.order_cap) sc.order_cap = *opt.order_cap;
  const RunMode mode = opt.mode.value_or(sc.mode);
  out.output_dir = sc.output_dir;

  ordered_json summary;
  summary["scenario"] = fs::path(sc.source).filename().string();
  summary["structure"] = sc.structure.label();
  summary["mode"] = to_string(mode);

  std::vector<Step> steps;
  auto finish = [&](int code) {
    summary["steps"] = ordered_json::object();
    for (const auto& s : steps) {
      summary["steps"][s.name] = s.data;
      summary["steps"][s.name]["pass"] = s.pass;
    }
    summary["pass"] = code == kExitPass;
    summary["exit_code"] = code;
    std::ofstream js(fs::path(sc.output_dir) / "summary.json", std::ios::binary);
    js << summary.dump(2) << '\n';
    out.files.push_back("summary.json");
    out.exit_code = code;
    return out;
  };

  try {
    require_inputs(sc, mode);
    if (sc.grid < 2 || sc.poincare.grid < 2) throw ConfigError("grid: need at least 2 points per axis");
    if (sc.order_cap < 0) throw ConfigError("order-cap: must be nonnegative");
    fs::create_directories(sc.output_dir);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    out.exit_code = kExitConfig;
    return out;
  }

  const auto v = validate_scenario(sc);
  {
    ordered_json d;
    d["R"] = v.R;
    d["worst_ratio"] = jnum(v.worst_ratio);
    d["T"] = jnum(v.T);
    d["T_max"] = jnum(v.T_max);
    d["min_phase"] = jnum(v.min_phase);
    if (!v.ok) d["message"] = v.message;
    steps.push_back({"validate", v.ok, d});
    Csv(fs::path(sc.output_dir) / "validation.csv", {"R", "worst_ratio", "T", "T_max", "min_phase", "ok"})
        .row({fmt(v.R), fmt(v.worst_ratio), fmt(v.T), fmt(v.T_max), fmt(v.min_phase), v.ok ? "1" : "0"});
    out.files.push_back("validation.csv");
  }
  log << (v.ok ? "PASS" : "FAIL") << " validate: R " << fmt(v.R) << " worst_ratio " << fmt(v.worst_ratio) << " T "
      << fmt(v.T) << '\n';
  if (!v.ok) {
    log << "  " << v.message << '\n';
    return finish(kExitValidation);
  }
  sc.radii.T = v.T;

  std::vector<RunMode> modes;
  if (mode == RunMode::All) {
    if (sc.u && !sc.taus.empty()) modes = sc.sweeps;
    if ((sc.u || sc.has_distribution) && !sc.taus.empty()) modes.push_back(RunMode::Poly);
    if (!sc.poincare.coefficients.empty() || !sc.poincare.primitive.empty()) modes.push_back(RunMode::Poincare);
    if (sc.has_distribution) modes.push_back(RunMode::Trace);
  } else if (mode != RunMode::Validate) {
    modes.push_back(mode);
  }

  Runner runner(sc, sc.output_dir, out);
  int code = kExitPass;
  for (RunMode m : modes) {
    try {
      switch (m) {
        case RunMode::Poly: steps.push_back(runner.poly()); break;
        case RunMode::Poincare: steps.push_back(runner.poincare()); break;
        case RunMode::Trace: steps.push_back(runner.trace()); break;
        default: steps.push_back(runner.sweep(m)); break;
      }
      log << (steps.back().pass ? "PASS " : "FAIL ") << steps.back().name << '\n';
      if (!steps.back().pass) code = std::max(code, static_cast<int>(kExitNumeric));
    } catch (const std::exception& e) {
      const int c = classify(e);
      ordered_json d;
      d["error"] = e.what();
      steps.push_back({to_string(m), false, d});
      log << "FAIL " << to_string(m) << ": " << e.what() << '\n';
      code = std::max(code, c);
    }
  }
  return finish(code);
}

int print_report(const std::string& out_dir, std::ostream& os) {
  std::ifstream in(fs::path(out_dir) / "summary.json");
  if (!in) {
    os << "error: no summary.json in " << out_dir << '\n';
    return kExitConfig;
  }
  ordered_json s;
  try {
    s = ordered_json::parse(in);
  } catch (const std::exception& e) {
    os << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  os << "scenario  " << s.value("scenario", "?") << "\n"
     << "structure " << s.value("structure", "?") << "\n"
     << "mode      " << s.value("mode", "?") << "\n";
  if (s.contains("steps"))
    for (const auto& [name, step] : s["steps"].items()) {
      os << (step.value("pass", false) ? "  PASS " : "  FAIL ") << name;
      for (const auto& [k, v] : step.items())
        if (k != "pass" && (v.is_number() || v.is_boolean() || v.is_string())) os << "  " << k << "=" << v.dump();
      os << '\n';
    }
  return s.value("exit_code", static_cast<int>(kExitConfig));
}

}  // namespace btlab
