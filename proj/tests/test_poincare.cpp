#include "btlab/errors.hpp"
#include "btlab/expression.hpp"
#include "btlab/poincare.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace btlab;

namespace {

Expression::Symbols t_symbols(int n) {
  Expression::Symbols s;
  if (n == 1) s["t"] = 0;
  for (int j = 0; j < n; ++j) s["t" + std::to_string(j + 1)] = j;
  return s;
}

SampledFunction tfun(int n, const std::string& text) { return expression_function(text, t_symbols(n), std::size_t(n)); }

// Sign of the permutation sorting the sequence, by counting bubble-sort swaps.
int brute_sign(std::vector<int> v) {
  int swaps = 0;
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = 0; b + 1 < v.size() - a; ++b)
      if (v[b] > v[b + 1]) {
        std::swap(v[b], v[b + 1]);
        ++swaps;
      }
  return swaps % 2 ? -1 : 1;
}

std::string random_poly(std::mt19937& rng, const std::vector<std::string>& vars, int degree) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(vars.size()) - 1);
  std::string text = std::to_string(coef(rng));
  for (int term = 0; term < 4; ++term) {
    text += " + " + std::to_string(coef(rng));
    std::uniform_int_distribution<int> deg(1, degree);
    const int d = deg(rng);
    for (int k = 0; k < d; ++k) text += "*" + vars[static_cast<std::size_t>(pick(rng))];
  }
  return text;
}

std::vector<std::string> t_names(int n) {
  std::vector<std::string> v;
  for (int j = 0; j < n; ++j) v.push_back("t" + std::to_string(j + 1));
  return v;
}

}  // namespace

TEST_CASE("epsilon_sign") {
  CHECK(epsilon_sign(1, {2, 3}) == 1);
  CHECK(epsilon_sign(2, {1, 3}) == -1);
  CHECK(epsilon_sign(3, {1, 2}) == 1);
  CHECK_THROWS_AS(epsilon_sign(2, {1, 2}), PreconditionError);
  for (int n = 1; n <= 6; ++n)
    for (int q = 0; q < n; ++q)
      for (const auto& J : IndexSet::all(n, q))
        for (int j = 1; j <= n; ++j) {
          if (J.contains(j)) continue;
          std::vector<int> seq{j};
          seq.insert(seq.end(), J.entries().begin(), J.entries().end());
          CHECK(epsilon_sign(j, J) == brute_sign(seq));
        }
}

TEST_CASE("index sets and forms") {
  CHECK_THROWS_AS(IndexSet({2, 1}), ParameterError);
  CHECK_THROWS_AS(IndexSet({0}), ParameterError);
  CHECK(IndexSet::all(4, 2).size() == 6);
  CHECK(IndexSet({1, 3}).with(2) == IndexSet({1, 2, 3}));
  CHECK(IndexSet({1, 3}).to_string() == "{1,3}");
  FormPQ f(1, 2, 0, 1);
  CHECK_THROWS_AS(f.set({}, {1, 2}, SampledFunction::constant(3, 1.0)), ParameterError);
  CHECK_THROWS_AS(f.set({}, {3}, SampledFunction::constant(3, 1.0)), ParameterError);
  CHECK_THROWS_AS(f.set({}, {1}, SampledFunction::constant(2, 1.0)), ParameterError);
  CHECK_THROWS_AS(FormPQ(1, 2, 2, 0), ParameterError);
}

TEST_CASE("L_operator examples") {
  const auto tr = translation_structure(1, 2);
  double p[3] = {0.1, 0.2, -0.3};

  FormPQ c(1, 2, 1, 1);
  c.set({1}, {2}, SampledFunction::constant(3, 2.5));
  const auto Lc = L_operator(c, tr);
  for (const auto& [key, g] : Lc.coefficients()) CHECK(g.value(Point(p)) == Complex(0.0));

  const auto miz = builtin_structure("mizohata");
  FormPQ z(1, 1, 0, 0);
  z.set({}, {}, structure_function(miz, "Z"));
  const auto Lz = L_operator(z, miz);
  for (const auto& [key, g] : Lz.coefficients()) CHECK(std::abs(g.value(Point(p))) < 1e-15);

  FormPQ f(1, 2, 0, 1);
  f.set({}, {1}, structure_function(tr, "t2"));
  const auto Lf = L_operator(f, tr);
  REQUIRE(Lf.q() == 2);
  CHECK(Lf.value({}, {1, 2}, Point(p)) == Complex(-1.0));

  // With a dZ factor the dt_j must move past it.
  FormPQ h(1, 2, 1, 0);
  h.set({1}, {}, structure_function(tr, "t1"));
  CHECK(L_operator(h, tr).value({1}, {1}, Point(p)) == Complex(-1.0));
}

TEST_CASE("L composed with L vanishes") {
  std::mt19937 rng(7);
  for (const char* name : {"mizohata2", "cr2"}) {
    const auto S = builtin_structure(name);
    const int m = S.m(), n = S.n();
    std::vector<std::string> vars = t_names(n);
    for (int k = 0; k < m; ++k) vars.push_back(m == 1 ? "x" : "x" + std::to_string(k + 1));
    if (n == 1) vars[0] = "t";
    for (int p = 0; p <= m; ++p)
      for (int q = 0; q + 2 <= n; ++q)
        for (int trial = 0; trial < 3; ++trial) {
          FormPQ f(m, n, p, q);
          for (const auto& I : IndexSet::all(m, p))
            for (const auto& J : IndexSet::all(n, q)) f.set(I, J, structure_function(S, random_poly(rng, vars, 3)));
          const auto LL = L_operator(L_operator(f, S), S);
          for (const auto& x : box_grid(Box::cube(std::size_t(m + n), 0.3), 3))
            for (const auto& [key, g] : LL.coefficients()) CHECK(std::abs(g.value(Point(x))) <= 1e-8);
        }
  }
}

TEST_CASE("K_q examples") {
  FormPQ a(0, 1, 0, 1);
  a.set({}, {1}, SampledFunction::constant(1, 1.0));
  double t1[1] = {0.7};
  CHECK(std::abs(K_q(a).value({}, {}, Point(t1)) - 0.7) < 1e-15);
  CHECK(std::abs(d_t(K_q(a)).value({}, {1}, Point(t1)) - 1.0) < 1e-15);

  FormPQ b(0, 2, 0, 1);
  b.set({}, {1}, tfun(2, "t2"));
  double t2[2] = {0.3, -0.8};
  CHECK(std::abs(K_q(b).value({}, {}, Point(t2)) - 0.3 * -0.8 / 2) < 1e-15);

  FormPQ c(0, 2, 0, 2);
  c.set({}, {1, 2}, SampledFunction::constant(2, 1.0));
  const auto Kc = K_q(c);
  CHECK(std::abs(Kc.value({}, {2}, Point(t2)) - 0.15) < 1e-15);
  CHECK(std::abs(Kc.value({}, {1}, Point(t2)) - 0.4) < 1e-15);

  CHECK_THROWS_AS(K_q(FormPQ(0, 2, 0, 0)), PreconditionError);
}

TEST_CASE("homotopy identity") {
  FormPQ a(0, 1, 0, 1);
  a.set({}, {1}, SampledFunction::constant(1, 1.0));
  double t1[1] = {0.4};
  CHECK(homotopy_check(a, Point(t1)) < 1e-15);

  double t2[2] = {0.5, -0.6};
  FormPQ b(0, 2, 0, 1);
  b.set({}, {1}, tfun(2, "t1*t2"));
  CHECK(homotopy_check(b, Point(t2)) <= 1e-10);
  FormPQ c(0, 2, 0, 1);
  c.set({}, {2}, tfun(2, "sin(t1)"));
  CHECK(homotopy_check(c, Point(t2)) <= 1e-8);

  // Twenty random polynomial forms across (n, q).
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> pos(-0.9, 0.9);
  int count = 0;
  for (int n = 1; n <= 3; ++n)
    for (int q = 1; q <= n; ++q)
      for (int trial = 0; trial < 4 && count < 20; ++trial, ++count) {
        FormPQ F(0, n, 0, q);
        for (const auto& J : IndexSet::all(n, q)) F.set({}, J, tfun(n, random_poly(rng, t_names(n), 3)));
        std::vector<double> t(static_cast<std::size_t>(n));
        for (double& v : t) v = pos(rng);
        CHECK(homotopy_check(F, Point(t)) <= 1e-8);
      }
  CHECK(count == 20);
}

TEST_CASE("G_tau_form") {
  const auto miz = builtin_structure("mizohata");
  auto cfg = make_config(miz, {0.4, 0.3, 0.1}, 1e4);
  double p[2] = {0.05, 0.2};
  const auto z = miz.Z(Point(p));
  const double t[1] = {0.2};

  FormPQ one(1, 1, 0, 1);
  one.set({}, {1}, SampledFunction::constant(2, 1.0));
  CHECK(std::abs(G_tau_form(one, cfg, z, Point(t)).begin()->second - 1.0) < 1e-6);

  auto u = structure_function(miz, "Z^2 + x");
  FormPQ f(1, 1, 0, 0);
  f.set({}, {}, u);
  CHECK(std::abs(G_tau_form(f, cfg.with_tau(50), z, Point(t)).begin()->second - G_tau(u, cfg.with_tau(50), Point(p))) <
        1e-12);

  FormPQ zdz(1, 1, 1, 0);
  zdz.set({1}, {}, structure_function(miz, "Z"));
  for (const auto& q : U_grid(miz, cfg.radii, 5)) {
    const double tq[1] = {q[1]};
    CHECK(std::abs(G_tau_form(zdz, cfg, miz.Z(Point(q)), Point(tq)).begin()->second - miz.Z(Point(q))[0]) < 1e-6);
  }

  // For an L-closed form the G-aggregate of 𝕃f vanishes.
  const auto m2 = builtin_structure("mizohata2");
  auto cfg2 = make_config(m2, {0.4, 0.3, 0.1}, 100);
  FormPQ closed(1, 2, 0, 1);
  closed.set({}, {1}, structure_function(m2, "Z^2"));
  closed.set({}, {2}, structure_function(m2, "exp(Z)"));
  double p3[3] = {0.05, 0.1, -0.2};
  CHECK(closedness_aggregate(closed, cfg2, Point(p3)) < 1e-6);
}

TEST_CASE("approximate_solve") {
  const double taus[] = {1e2, 1e3, 1e4};
  SUBCASE("zero form") {
    auto cfg = make_config(translation_structure(1, 2), {0.4, 0.3, 0.1}, 100);
    auto rep = approximate_solve(FormPQ(1, 2, 0, 1), cfg, taus, 3);
    for (double r : rep.residuals) CHECK(r == 0.0);
  }
  SUBCASE("translation, f = dt_1") {
    auto cfg = make_config(translation_structure(1, 2), {0.4, 0.3, 0.1}, 100);
    FormPQ f(1, 2, 0, 1);
    f.set({}, {1}, SampledFunction::constant(3, 1.0));
    auto rep = approximate_solve(f, cfg, taus, 3);
    CHECK(rep.residuals.back() < 1e-8);
    // The primitive is t_1 up to the cutoff tail.
    double p[3] = {0.05, 0.2, 0.1};
    CHECK(std::abs(rep.solutions.back().value({}, {}, Point(p)) - 0.2) < 1e-8);
  }
  SUBCASE("manufactured f = L(Z t_1) on the n = 2 Mizohata structure") {
    const auto S = builtin_structure("mizohata2");
    const double R = 0.2;
    auto cfg = make_config(S, {R, find_T(S, R).T, 0.1}, 100);
    FormPQ g(1, 2, 0, 0);
    g.set({}, {}, structure_function(S, "Z*t1"));
    const FormPQ f = L_operator(g, S);
    auto rep = approximate_solve(f, cfg, taus, 3);
    CHECK(rep.closedness <= 1e-8);
    CHECK(rep.residuals[1] < rep.residuals[0]);
    CHECK(rep.residuals[2] < rep.residuals[1]);
    CHECK(rep.residuals[2] <= 1e-3);
  }
  SUBCASE("refusals") {
    auto cfg = make_config(translation_structure(1, 2), {0.4, 0.3, 0.1}, 100);
    FormPQ f(1, 2, 0, 1);
    f.set({}, {1}, structure_function(cfg.structure, "t2"));
    CHECK_THROWS_AS(approximate_solve(f, cfg, taus, 3), PreconditionError);
    CHECK_THROWS_AS(approximate_solve(FormPQ(1, 2, 0, 0), cfg, taus, 3), PreconditionError);
  }
}
