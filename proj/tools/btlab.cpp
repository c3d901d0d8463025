// Scenario runner: btlab <verb> --scenario file.ini [--out dir] [--threads k] [--grid pts] [--order-cap k]

#include "btlab/errors.hpp"
#include "btlab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace btlab;

int main(int argc, char** argv) {
  CLI::App app{"Baouendi-Treves approximation lab"};
  app.require_subcommand(1);

  std::string scenario, out_dir;
  int threads = 0, grid = 0, order_cap = -1;
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir, "output directory (overrides [run] output_dir)");
    cmd->add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    cmd->add_option("--grid", grid, "U-grid points per axis")->check(CLI::Range(2, 200));
    cmd->add_option("--order-cap", order_cap, "derivative order of the Gevrey-weighted error")
        ->check(CLI::Range(0, 8));
  };

  struct Verb {
    const char* name;
    const char* help;
    std::optional<RunMode> mode;
  };
  const Verb verbs[] = {{"run", "run the mode named in the scenario", std::nullopt},
                        {"validate", "check the Lipschitz bound and T", RunMode::Validate},
                        {"sweep", "run the scenario's sweep or poly mode", std::nullopt},
                        {"poincare", "approximate Poincaré solve", RunMode::Poincare},
                        {"trace", "trace pipeline checks", RunMode::Trace}};
  std::vector<std::pair<CLI::App*, const Verb*>> commands;
  for (const auto& v : verbs) {
    auto* cmd = app.add_subcommand(v.name, v.help);
    add_run_flags(cmd);
    commands.emplace_back(cmd, &v);
  }
  auto* report = app.add_subcommand("report", "print summary.json of a previous run");
  std::string report_dir = "out";
  report->add_option("--out", report_dir, "output directory of the run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (report->parsed()) return print_report(report_dir, std::cout);

  for (const auto& [cmd, verb] : commands) {
    if (!cmd->parsed()) continue;
    try {
      Scenario sc = load_scenario(scenario);
      RunOptions opt;
      opt.mode = verb->mode;
      if (std::string(verb->name) == "sweep") {
        const bool ok = sc.mode == RunMode::GSweep || sc.mode == RunMode::RSweep || sc.mode == RunMode::ESweep ||
                        sc.mode == RunMode::Poly;
        if (!ok) throw ConfigError(sc.source + ":" + std::to_string(sc.mode_line) + ": mode " + to_string(sc.mode) +
                                   " is not a sweep; use g-sweep, r-sweep, e-sweep or poly");
      }
      if (!out_dir.empty()) opt.out_dir = out_dir;
      if (cmd->count("--threads")) opt.threads = threads;
      if (grid > 0) opt.grid = grid;
      if (order_cap >= 0) opt.order_cap = order_cap;
      const auto outcome = run_scenario(std::move(sc), opt, std::cout);
      return outcome.exit_code;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  return kExitConfig;
}
