// Acceptance run: one PASS/FAIL line per criterion; exit status 0 iff every criterion passes.

#include "btlab/errors.hpp"
#include "btlab/expression.hpp"
#include "btlab/faa_di_bruno.hpp"
#include "btlab/gevrey.hpp"
#include "btlab/parallel.hpp"
#include "btlab/poincare.hpp"
#include "btlab/runner.hpp"
#include "btlab/trace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

using namespace btlab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

constexpr double kPi = std::numbers::pi;

// 1. dZ_k(M_k') = δ, dZ_k(L_j) = 0, dt_j(L_j') = δ, dt_j(M_k) = 0 on V̄.
Verdict frame_duality() {
  double worst = 0.0;
  std::size_t points = 0;
  for (const char* name : {"translation", "mizohata", "shear", "cr2"}) {
    const auto S = builtin_structure(name);
    const double R = 0.4;
    const int m = S.m(), n = S.n();
    std::vector<SampledFunction> Zs, ts;
    for (int k = 0; k < m; ++k) Zs.push_back(structure_function(S, m == 1 ? "Z" : "Z" + std::to_string(k + 1)));
    for (int j = 0; j < n; ++j) ts.push_back(structure_function(S, n == 1 ? "t" : "t" + std::to_string(j + 1)));
    for (const auto& p : box_grid(Box::cube(static_cast<std::size_t>(S.N()), R), 17)) {
      double x2 = 0.0, t2 = 0.0;
      for (int k = 0; k < m; ++k) x2 += p[static_cast<std::size_t>(k)] * p[static_cast<std::size_t>(k)];
      for (int j = 0; j < n; ++j) t2 += p[static_cast<std::size_t>(m + j)] * p[static_cast<std::size_t>(m + j)];
      if (x2 > R * R || t2 > R * R) continue;
      ++points;
      auto pair = [&](const SampledFunction& f, VectorField X) { return apply_vector_fields(S, f, Word{X}, Point(p)); };
      for (int k = 0; k < m; ++k) {
        for (int k2 = 0; k2 < m; ++k2)
          worst = std::max(worst, std::abs(pair(Zs[static_cast<std::size_t>(k)], {VectorField::M, k2}) - (k == k2 ? 1.0 : 0.0)));
        for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(pair(Zs[static_cast<std::size_t>(k)], {VectorField::L, j})));
      }
      for (int j = 0; j < n; ++j) {
        for (int j2 = 0; j2 < n; ++j2)
          worst = std::max(worst, std::abs(pair(ts[static_cast<std::size_t>(j)], {VectorField::L, j2}) - (j == j2 ? 1.0 : 0.0)));
        for (int k = 0; k < m; ++k) worst = std::max(worst, std::abs(pair(ts[static_cast<std::size_t>(j)], {VectorField::M, k})));
      }
    }
  }
  return {worst <= 1e-12, "worst residual " + sci(worst) + " over " + std::to_string(points) + " points of V"};
}

// Random smooth maps evaluable on jets, used to compose f∘g by plain Taylor arithmetic.
struct RandomMap {
  double a, b, c, d;
  int kind;
  Jet operator()(const Jet& y1, const Jet& y2) const {
    switch (kind) {
      case 0: return exp(y1 * a) * (y2 * b + 1.0);
      case 1: return sin(y1 * c + y2 * d) + y1 * y2 * a;
      case 2: return cos(y1 * b) * exp(y2 * d * 0.5) + y1 * y1 * c;
      default: return exp(sin(y1 * a) + y2 * y2 * b);
    }
  }
};

SampledFunction from_map(const RandomMap& m, std::size_t dim) {
  return SampledFunction::from_jet(Box::unbounded(dim), [m, dim](Point p, int order) {
    const JetLayout* L = JetLayout::get(static_cast<int>(dim), order);
    return m(Jet::variable(L, 0, p[0]), dim > 1 ? Jet::variable(L, 1, p[1]) : Jet(L, 0.0));
  });
}

// 2. compose_derivative against direct Taylor composition, plus the exp(x²) witness.
Verdict fdb_oracle() {
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), pt(-0.5, 0.5);
  std::uniform_int_distribution<int> kind(0, 3), dimd(1, 2), ord(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = dimd(rng), p = dimd(rng);
    const RandomMap outer{coef(rng), coef(rng), coef(rng), coef(rng), kind(rng)};
    std::vector<RandomMap> inner;
    for (int c = 0; c < p; ++c) inner.push_back({coef(rng), coef(rng), coef(rng), coef(rng), kind(rng) % 3});
    const auto f = from_map(outer, static_cast<std::size_t>(p));
    std::vector<SampledFunction> g;
    for (const auto& im : inner) g.push_back(from_map(im, static_cast<std::size_t>(n)));
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = pt(rng);
    MultiIndex alpha(static_cast<std::size_t>(n));
    const int total = ord(rng);
    for (int k = 0; k < total; ++k) alpha[rng() % unsigned(n)] += 1;

    const JetLayout* L = JetLayout::get(n, total);
    const Jet x1 = Jet::variable(L, 0, x[0]), x2 = n > 1 ? Jet::variable(L, 1, x[1]) : Jet(L, 0.0);
    std::vector<Jet> gj;
    for (const auto& im : inner) gj.push_back(im(x1, x2));
    const Complex want = outer(gj[0], p > 1 ? gj[1] : Jet(L, 0.0)).derivative(alpha);
    const Complex got = compose_derivative(f, g, alpha, Point(x));
    worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  const auto ex = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int o) {
    return exp(Jet::variable(JetLayout::get(1, o), 0, p[0]));
  });
  const auto sq = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int o) {
    const Jet x = Jet::variable(JetLayout::get(1, o), 0, p[0]);
    return x * x;
  });
  const double one = 1.0;
  const Complex w = compose_derivative(ex, std::span(&sq, 1), MultiIndex{3}, Point(&one, 1));
  const double wrel = std::abs(w - 20.0 * std::exp(1.0)) / (20.0 * std::exp(1.0));
  return {worst <= 1e-8 && wrel <= 1e-8,
          "30 random pairs worst rel " + sci(worst) + "; (e^{x^2})'''(1) rel error vs 20e " + sci(wrel)};
}

// 3. |κ|!^t Π|δ_j|!^{t|β_j|} <= |α|!^t in exact arithmetic, t = 1, 2, 3.
Verdict partition_bound() {
  std::size_t terms = 0, failures = 0;
  for (int n = 1; n <= 2; ++n)
    for (int p = 1; p <= 2; ++p)
      for (int k = 1; k <= 8; ++k)
        for (const auto& alpha : indices_of_order(static_cast<std::size_t>(n), k))
          for (const auto& term : faa_di_bruno_terms(alpha, p)) {
            ++terms;
            for (int t = 1; t <= 3; ++t)
              if (!partition_factorial_bound(term, alpha, t)) ++failures;
          }
  return {failures == 0 && terms > 0,
          std::to_string(terms) + " partition terms (n, p <= 2, |alpha| <= 8), " + std::to_string(failures) + " violations"};
}

ApproxConfig mizohata_config(double tau) {
  const auto S = builtin_structure("mizohata");
  return make_config(S, {0.4, find_T(S, 0.4).T, 0.1}, tau);
}

// 4. G_τ[y²] - χy² = 1/(2τ) at x = 0; sweep slope and bound.
Verdict g_convergence() {
  const auto cfg = make_config(builtin_structure("translation"), {2.0, 0.4, 0.1}, 100.0);
  const auto u = structure_function(cfg.structure, "x^2");
  const double taus[] = {1e2, 1e3, 1e4, 1e5};
  double moment = 0.0;
  for (double tau : taus) {
    const double p[2] = {0.0, 0.1};
    moment = std::max(moment, std::abs(G_tau(u, cfg.with_tau(tau), Point(p)) - 1.0 / (2.0 * tau)));
  }
  const auto rep = convergence_sweep(u, cfg, taus, SweepMode::G_to_chi_u, {17, 2, {}});
  return {moment <= 1e-8 && rep.fitted_slope <= -0.45 && rep.bound_dominates,
          "|G(0) - 1/(2tau)| " + sci(moment) + ", slope " + sci(rep.fitted_slope) + ", bound dominates " +
              (rep.bound_dominates ? "yes" : "no")};
}

// 5. Direct and Stokes forms of R_τ on Mizohata.
Verdict stokes() {
  double worst = 0.0;
  std::size_t n = 0;
  for (double tau : {50.0, 200.0}) {
    const auto c = mizohata_config(tau);
    for (const char* e : {"1", "Z", "Z^2"}) {
      const auto u = structure_function(c.structure, e);
      // An even grid avoids t = 0, where both forms vanish identically.
      for (const auto& p : U_grid(c.structure, c.radii, 4)) {
        const Complex d = R_tau_direct(u, c, Point(p)), s = R_tau_stokes(u, c, Point(p));
        worst = std::max(worst, std::abs(d - s) / std::abs(d));
        ++n;
      }
    }
  }
  return {worst <= 1e-6, "worst relative gap " + sci(worst) + " over " + std::to_string(n) + " evaluations"};
}

// 6. R_τ decay on Mizohata.
Verdict r_decay() {
  const auto cfg = mizohata_config(100);
  const auto u = structure_function(cfg.structure, "Z^2");
  const double taus[] = {100, 200, 400, 800};
  const auto rep = convergence_sweep(u, cfg, taus, SweepMode::R_decay, {17, 2, {}});
  std::string errs;
  for (double e : rep.sup_errors) errs += (errs.empty() ? "" : " ") + sci(e);
  return {rep.strictly_decreasing && rep.fitted_exp_rate < 0 && rep.bound_dominates,
          "sup errors " + errs + ", rate " + sci(rep.fitted_exp_rate) + ", bound dominates " +
              (rep.bound_dominates ? "yes" : "no")};
}

// 7. δ_0 on translation: Taylor coefficients of π^{-1/2}e^{-Z²}; deviation monotone and below the tail bound.
Verdict polynomial() {
  const auto cfg = make_config(builtin_structure("translation"), {0.4, 0.4, 0.1}, 1.0);
  const DistributionData d0{{}, {PointFunctional{{0.0}, MultiIndex{0}, 1.0, SampledFunction::constant(1, 1.0)}}};
  double coef_err = 0.0;
  const auto P10 = polynomial_approximant(d0, cfg, 10);
  for (int g = 0; g <= 10; ++g) {
    const double want = g % 2 ? 0.0 : std::pow(-1.0, g / 2) / std::tgamma(g / 2 + 1.0) / std::sqrt(kPi);
    coef_err = std::max(coef_err, std::abs(P10.coefficient(MultiIndex{g}) - want));
  }
  const auto grid = U_grid(cfg.structure, cfg.radii, 17);
  std::vector<Complex> E;
  for (const auto& p : grid) E.push_back(E_tau(d0, cfg, Point(p)));
  bool monotone = true, below = true;
  double prev = INFINITY, last = 0.0;
  for (int D = 0; D <= 10; ++D) {
    const auto P = polynomial_approximant(d0, cfg, D);
    double dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) dev = std::max(dev, std::abs(P(cfg.structure.Z(Point(grid[i]))) - E[i]));
    monotone = monotone && dev <= prev;
    below = below && dev <= P.tail_bound;
    prev = last = dev;
  }
  return {coef_err <= 1e-10 && monotone && below, "coefficient error " + sci(coef_err) + ", deviation at D=10 " +
                                                       sci(last) + ", monotone " + (monotone ? "yes" : "no") +
                                                       ", below tail bound " + (below ? "yes" : "no")};
}

// 8. F = d_t K F + K d_t F on random polynomial forms.
Verdict homotopy() {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), pos(-0.9, 0.9);
  double worst = 0.0;
  int count = 0;
  for (int n = 1; n <= 3; ++n) {
    Expression::Symbols sym;
    std::vector<std::string> names;
    for (int j = 0; j < n; ++j) {
      names.push_back("t" + std::to_string(j + 1));
      sym[names.back()] = j;
    }
    std::uniform_int_distribution<int> pick(0, n - 1), deg(1, 3);
    for (int q = 1; q <= n; ++q) {
      const int trials = n == 3 ? (q == 3 ? 5 : 4) : (n == 2 ? 3 : 1);
      for (int trial = 0; trial < trials; ++trial, ++count) {
        FormPQ F(0, n, 0, q);
        for (const auto& J : IndexSet::all(n, q)) {
          std::string text = std::to_string(coef(rng));
          for (int term = 0; term < 4; ++term) {
            text += " + " + std::to_string(coef(rng));
            for (int k = deg(rng); k > 0; --k) text += "*" + names[std::size_t(pick(rng))];
          }
          F.set({}, J, expression_function(text, sym, static_cast<std::size_t>(n)));
        }
        std::vector<double> t(static_cast<std::size_t>(n));
        for (double& v : t) v = pos(rng);
        worst = std::max(worst, homotopy_check(F, Point(t)));
      }
    }
  }
  return {count == 20 && worst <= 1e-8, std::to_string(count) + " forms, (n, q) up to (3, 3), worst residual " + sci(worst)};
}

// 9. Manufactured f = 𝕃(Z t_1) on the m = 1, n = 2 structure.
Verdict poincare() {
  const auto S = builtin_structure("mizohata2");
  const double R = 0.2;
  const auto cfg = make_config(S, {R, find_T(S, R).T, 0.1}, 100);
  FormPQ g(1, 2, 0, 0);
  g.set({}, {}, structure_function(S, "Z*t1"));
  const double taus[] = {1e2, 1e3, 1e4};
  const auto rep = approximate_solve(L_operator(g, S), cfg, taus, 3);
  const auto& r = rep.residuals;
  return {r[1] < r[0] && r[2] < r[1] && r[2] <= 1e-3,
          "residuals " + sci(r[0]) + " " + sci(r[1]) + " " + sci(r[2]) + " at tau 1e2 1e3 1e4"};
}

// 10. Trace: restriction, λ-independence, consistency and the Gevrey certificate.
Verdict trace() {
  const Expression::Symbols xt{{"x", 0}, {"t", 1}}, tt{{"t", 0}};
  const auto cutoff = make_cutoff(1, 1, 1.0, 2.0, 1.5, 512, 4);
  const auto other = make_cutoff(1, 1, 1.0, 1.8, 1.6, 512, 4);
  const auto phi = gevrey_bump(1.5, 0.2, 1.0, 1);
  const auto psi = gevrey_bump(2.0, 0.4, 0.9, 1);
  const std::vector<double> ts{-0.5, 0.0, 0.5};

  DistributionData gauss;
  gauss.density = expression_function("exp(-x^2 - t^2)", xt, 2);
  const TracePairing A(fourier_of(gauss, cutoff), cutoff, phi);
  double restriction = 0.0;
  for (double t : ts) {
    const QuadratureRule rule{QuadratureRule::Kind::GaussLegendre, 32, 16, 12.0};
    const Complex want = integrate_rm(
        [&](Point x) {
          const double p[2] = {x[0], t};
          return gauss.density->value(Point(p)) * phi.value(x);
        },
        rule, Box{{-1.0}, {1.0}});
    restriction = std::max(restriction, std::abs(A.value(Point(&t, 1)) - want));
  }

  std::vector<DistributionData> corpus(3);
  corpus[0] = gauss;
  corpus[1].density = expression_function("exp(x - t) * (1 + x*t)", xt, 2);
  corpus[2].points.push_back({{0.4}, MultiIndex{1}, -1.5, expression_function("exp(t)", tt, 1)});
  double spread = 0.0, consistency = 0.0;
  bool certificate = true;
  std::vector<std::vector<double>> tgrid;
  for (double t : ts) tgrid.push_back({t});
  for (const auto& u : corpus) {
    const auto c = trace_consistency(u, cutoff, other, phi, psi);
    spread = std::max(spread, c.lambda_spread);
    consistency = std::max(consistency, c.residual);
    certificate = certificate && trace_t_regularity(u, cutoff, phi, tgrid, 4, 2.0).gevrey_certificate;
  }
  return {restriction <= 1e-5 && spread <= 1e-5 && consistency <= 1e-5 && certificate,
          "restriction " + sci(restriction) + ", lambda spread " + sci(spread) + ", consistency " + sci(consistency) +
              ", certificate " + (certificate ? "yes" : "no")};
}

// 11. Point functionals whose t-profiles vanish at 0 have vanishing E_τ.
Verdict vanishing_trace() {
  const Expression::Symbols tt{{"t", 0}};
  const char* profiles[] = {"t", "t^2", "sin(t)", "t*exp(t)"};
  std::vector<DistributionData> corpus;
  for (int order = 0; order <= 2; ++order)
    for (const char* prof : profiles) {
      DistributionData d;
      d.points.push_back({{0.0}, MultiIndex{order}, 1.0, expression_function(prof, tt, 1)});
      d.points.push_back({{0.05}, MultiIndex{(order + 1) % 3}, Complex(0.5, -2.0), expression_function("t", tt, 1)});
      corpus.push_back(std::move(d));
    }
  double check = 0.0, direct = 0.0;
  std::size_t evals = 0;
  for (const char* name : {"translation", "mizohata"}) {
    const auto S = builtin_structure(name);
    for (double tau : {100.0, 1e4}) {
      const auto cfg = make_config(S, {0.4, find_T(S, 0.4).T, 0.1}, tau);
      const auto grid = U_grid(S, cfg.radii, 17);
      for (const auto& u : corpus) {
        check = std::max(check, vanishing_trace_check(u, cfg, 17));
        for (const auto& p : grid) {
          direct = std::max(direct, std::abs(E_tau(u, cfg, Point(p))));
          ++evals;
        }
      }
    }
  }
  return {check == 0.0 && direct < 1e-14, "vanishing_trace_check max " + sci(check) + ", max |E_tau u| " + sci(direct) +
                                              " over " + std::to_string(evals) + " grid evaluations"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 12. Two runs of every scenario give byte-identical CSV files.
Verdict determinism() {
  const fs::path base = fs::temp_directory_path() / "btlab_acceptance";
  fs::remove_all(base);
  std::vector<fs::path> scenarios;
  for (const auto& e : fs::directory_iterator(BTLAB_SCENARIO_DIR))
    if (e.path().extension() == ".ini") scenarios.push_back(e.path());
  std::sort(scenarios.begin(), scenarios.end());
  std::size_t files = 0, differing = 0;
  bool all_pass = true;
  for (const auto& sc : scenarios) {
    const auto a = base / "a" / sc.stem(), b = base / "b" / sc.stem();
    std::ostringstream log;
    RunOptions oa, ob;
    oa.out_dir = a.string();
    ob.out_dir = b.string();
    oa.threads = 1;
    ob.threads = 2;
    const int ca = run_scenario(load_scenario(sc.string()), oa, log).exit_code;
    const int cb = run_scenario(load_scenario(sc.string()), ob, log).exit_code;
    all_pass = all_pass && ca == kExitPass && cb == kExitPass;
    for (const auto& f : fs::directory_iterator(a)) {
      if (f.path().extension() != ".csv") continue;
      ++files;
      if (!fs::exists(b / f.path().filename()) || slurp(f.path()) != slurp(b / f.path().filename())) ++differing;
    }
  }
  set_thread_count(1);
  return {differing == 0 && files > 0 && all_pass,
          std::to_string(scenarios.size()) + " scenarios, " + std::to_string(files) + " CSV files, " +
              std::to_string(differing) + " differ; every run passed: " + (all_pass ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime limit
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {1, "frame duality", 5, frame_duality},
      {2, "Faa di Bruno oracle equivalence", 10, fdb_oracle},
      {3, "partition factorial bound", 0, partition_bound},
      {4, "G_tau convergence", 30, g_convergence},
      {5, "Stokes identity", 60, stokes},
      {6, "R_tau decay", 120, r_decay},
      {7, "polynomial approximants", 0, polynomial},
      {8, "homotopy identity", 10, homotopy},
      {9, "approximate Poincare solve", 180, poincare},
      {10, "trace pipeline", 60, trace},
      {11, "vanishing trace", 0, vanishing_trace},
      {12, "determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_s == 0 || secs < c.limit_s;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %s: %s; %.2f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs,
                c.limit_s > 0 ? (in_time ? " (limit " + sci(c.limit_s) + " s)" : " exceeds limit " + sci(c.limit_s) + " s").c_str()
                              : "");
    std::fflush(stdout);
  }
  std::printf("%d of 12 criteria passed\n", 12 - failed);
  return failed == 0 ? 0 : 1;
}
