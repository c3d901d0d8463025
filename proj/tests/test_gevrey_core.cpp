#include "btlab/errors.hpp"
#include "btlab/faa_di_bruno.hpp"
#include "btlab/gevrey.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace btlab;

namespace {

/// Independent oracle: number of integer partitions of k.
int partition_count(int k, int max_part) {
  if (k == 0) return 1;
  int total = 0;
  for (int p = std::min(k, max_part); p >= 1; --p) total += partition_count(k - p, p);
  return total;
}

/// A random smooth map built from exp, sin and polynomials, evaluable on
/// complex numbers and on jets alike.
struct RandomMap {
  double a, b, c, d;
  int kind;
  template <class T>
  T operator()(const T& y1, const T& y2) const {
    switch (kind) {
      case 0: return exp(y1 * a) * (y2 * b + 1.0);
      case 1: return sin(y1 * c + y2 * d) + y1 * y2 * a;
      case 2: return cos(y1 * b) * exp(y2 * d * 0.5) + y1 * y1 * c;
      default: return exp(sin(y1 * a) + y2 * y2 * b);
    }
  }
};

Complex exp(Complex z) { return std::exp(z); }
Complex sin(Complex z) { return std::sin(z); }
Complex cos(Complex z) { return std::cos(z); }

SampledFunction from_map(const RandomMap& m, std::size_t dim) {
  return SampledFunction::from_jet(Box::unbounded(dim), [m, dim](Point p, int order) {
    const JetLayout* L = JetLayout::get(static_cast<int>(dim), order);
    Jet y1 = Jet::variable(L, 0, p[0]);
    Jet y2 = dim > 1 ? Jet::variable(L, 1, p[1]) : Jet(L, 0.0);
    return m(y1, y2);
  });
}

}  // namespace

TEST_CASE("faa_di_bruno_terms: one-dimensional enumeration") {
  auto t1 = faa_di_bruno_terms(MultiIndex{1}, 1);
  REQUIRE(t1.size() == 1);
  CHECK(t1[0].deltas[0] == MultiIndex{1});
  CHECK(t1[0].betas[0] == MultiIndex{1});

  auto t2 = faa_di_bruno_terms(MultiIndex{2}, 1);
  REQUIRE(t2.size() == 2);
  CHECK(t2[0].deltas == std::vector<MultiIndex>{MultiIndex{1}});
  CHECK(t2[0].betas == std::vector<MultiIndex>{MultiIndex{2}});
  CHECK(t2[1].deltas == std::vector<MultiIndex>{MultiIndex{2}});

  auto t3 = faa_di_bruno_terms(MultiIndex{3}, 1);
  REQUIRE(t3.size() == 3);
  std::set<std::vector<MultiIndex>> shapes;
  for (auto& t : t3) shapes.insert(t.deltas);
  CHECK(shapes.count({MultiIndex{1}}) == 1);
  CHECK(shapes.count({MultiIndex{3}}) == 1);
  CHECK(shapes.count({MultiIndex{1}, MultiIndex{2}}) == 1);
  // ℓ ascending: the two-block term comes last.
  CHECK(t3[2].length() == 2);

  for (int k = 1; k <= 8; ++k) CHECK(faa_di_bruno_terms(MultiIndex{k}, 1).size() == partition_count(k, k));
}

TEST_CASE("faa_di_bruno_terms: structural invariants in several dimensions") {
  for (int p = 1; p <= 2; ++p)
    for (auto alpha : {MultiIndex{2, 1}, MultiIndex{1, 1, 1}, MultiIndex{3, 2}, MultiIndex{0, 4}}) {
      const auto terms = faa_di_bruno_terms(alpha, p);
      std::set<std::pair<std::vector<MultiIndex>, std::vector<MultiIndex>>> seen;
      std::size_t prev_len = 0;
      for (const auto& t : terms) {
        MultiIndex sum(alpha.dim()), kappa(static_cast<std::size_t>(p));
        std::set<MultiIndex> distinct(t.deltas.begin(), t.deltas.end());
        CHECK(distinct.size() == t.deltas.size());
        for (std::size_t j = 0; j < t.length(); ++j) {
          CHECK_FALSE(t.deltas[j].is_zero());
          CHECK_FALSE(t.betas[j].is_zero());
          sum = sum + t.deltas[j].scaled(t.betas[j].order());
          kappa = kappa + t.betas[j];
        }
        CHECK(sum == alpha);
        CHECK(kappa == t.kappa);
        CHECK(seen.insert({t.deltas, t.betas}).second);
        CHECK(t.length() >= prev_len);
        prev_len = t.length();
      }
    }
  CHECK_THROWS_AS(faa_di_bruno_terms(MultiIndex{0, 0}, 1), PreconditionError);
}

TEST_CASE("compose_derivative: exp of x^2 third derivative") {
  auto f = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int order) {
    return exp(Jet::variable(JetLayout::get(1, order), 0, p[0]));
  });
  auto g = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int order) {
    Jet x = Jet::variable(JetLayout::get(1, order), 0, p[0]);
    return x * x;
  });
  double x = 1.0;
  Complex d = compose_derivative(f, std::span(&g, 1), MultiIndex{3}, Point(&x, 1));
  CHECK(d.real() == doctest::Approx(20.0 * std::exp(1.0)).epsilon(1e-13));
}

TEST_CASE("compose_derivative: identity and linear witnesses") {
  RandomMap m{0.7, -0.3, 1.1, 0.4, 1};
  auto f = from_map(m, 2);
  std::vector<SampledFunction> id = {
      SampledFunction::from_jet(Box::unbounded(2), [](Point p, int o) { return Jet::variable(JetLayout::get(2, o), 0, p[0]); }),
      SampledFunction::from_jet(Box::unbounded(2), [](Point p, int o) { return Jet::variable(JetLayout::get(2, o), 1, p[1]); })};
  double x[2] = {0.2, -0.1};
  MultiIndex a{2, 1};
  CHECK(std::abs(compose_derivative(f, id, a, Point(x, 2)) - f.derivative(a, Point(x, 2))) < 1e-12);

  auto linear = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int o) {
    return Jet::variable(JetLayout::get(1, o), 0, p[0]);
  });
  std::vector<SampledFunction> g = {from_map(RandomMap{0.5, 0.2, -0.7, 0.3, 2}, 1)};
  CHECK(std::abs(compose_derivative(linear, g, MultiIndex{2}, Point(x, 1)) - g[0].derivative(MultiIndex{2}, Point(x, 1))) <
        1e-12);
}

TEST_CASE("compose_derivative agrees with jet-arithmetic composition on random pairs") {
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), pt(-0.5, 0.5);
  std::uniform_int_distribution<int> kind(0, 3), dimd(1, 2), ord(1, 6);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = dimd(rng), p = dimd(rng);
    RandomMap outer{coef(rng), coef(rng), coef(rng), coef(rng), kind(rng)};
    std::vector<RandomMap> inner;
    for (int c = 0; c < p; ++c) inner.push_back({coef(rng), coef(rng), coef(rng), coef(rng), kind(rng) % 3});
    auto f = from_map(outer, static_cast<std::size_t>(p));
    std::vector<SampledFunction> g;
    for (auto& im : inner) g.push_back(from_map(im, static_cast<std::size_t>(n)));
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = pt(rng);
    // Alpha with |α| in [1, 6].
    MultiIndex alpha(static_cast<std::size_t>(n));
    const int total = ord(rng);
    for (int k = 0; k < total; ++k) alpha[static_cast<std::size_t>(rng() % static_cast<unsigned>(n))] += 1;

    // Oracle: compose with truncated Taylor arithmetic directly.
    const JetLayout* L = JetLayout::get(n, total);
    Jet xs[2] = {Jet::variable(L, 0, x[0]), n > 1 ? Jet::variable(L, 1, x[1]) : Jet(L, 0.0)};
    std::vector<Jet> gj;
    for (auto& im : inner) gj.push_back(im(xs[0], xs[1]));
    Jet composite = outer(gj[0], p > 1 ? gj[1] : Jet(L, 0.0));
    const Complex expected = composite.derivative(alpha);
    const Complex got = compose_derivative(f, g, alpha, Point(x));
    CHECK(std::abs(got - expected) <= 1e-8 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("compose_derivative agrees with finite differences at low order") {
  RandomMap outer{0.6, -0.4, 0.9, 0.3, 0};
  RandomMap inner{0.5, 0.8, -0.6, 0.2, 1};
  auto f = from_map(outer, 1);
  std::vector<SampledFunction> g = {from_map(inner, 2)};
  auto composite = [&](Point p) { return outer(inner(Complex(p[0]), Complex(p[1])), Complex(0.0)); };
  double x[2] = {0.1, 0.3};
  for (auto a : {MultiIndex{1, 0}, MultiIndex{1, 1}, MultiIndex{0, 2}}) {
    const Complex fd = finite_difference(composite, a, Point(x, 2));
    CHECK(std::abs(compose_derivative(f, g, a, Point(x, 2)) - fd) < 1e-6);
  }
}

TEST_CASE("exp_phase_derivative examples") {
  double x0 = 0.0;
  auto zero = SampledFunction::constant(1, 0.0);
  CHECK(std::abs(exp_phase_derivative(3.0, zero, MultiIndex{2}, Point(&x0, 1))) == 0.0);

  auto negsq = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int o) {
    Jet x = Jet::variable(JetLayout::get(1, o), 0, p[0]);
    return -(x * x);
  });
  CHECK(exp_phase_derivative(1.0, negsq, MultiIndex{2}, Point(&x0, 1)).real() == doctest::Approx(-2.0));

  auto ix = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int o) {
              return Jet::variable(JetLayout::get(1, o), 0, p[0]) * Complex(0, 1);
            }).with_gevrey(GevreyParams{2.0, 1.0, 8});
  double x1 = 0.3;
  auto r = exp_phase_derivative_checked(10.0, ix, MultiIndex{1}, Point(&x1, 1));
  CHECK(std::abs(r.value - Complex(0, 10) * std::exp(Complex(0, 3.0))) < 1e-12);
  CHECK(std::abs(r.value) == doctest::Approx(10.0));
  CHECK(r.within_bound);
  CHECK_THROWS_AS(exp_phase_derivative_checked(1.0, negsq, MultiIndex{1}, Point(&x0, 1)), CapabilityError);
}

TEST_CASE("exp_phase_derivative bound holds across orders and tau") {
  auto phase = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int o) {
                 Jet x = Jet::variable(JetLayout::get(1, o), 0, p[0]);
                 return -(x * x) + x * Complex(0, 0.5);
               }).with_gevrey(GevreyParams{2.0, 1.5, 8});
  for (double tau : {1.0, 10.0, 100.0})
    for (int k = 1; k <= 6; ++k) {
      double x = 0.4;
      auto r = exp_phase_derivative_checked(tau, phase, MultiIndex{k}, Point(&x, 1));
      CHECK(r.within_bound);
    }
}

TEST_CASE("fdb_moment_sum values and geometric growth") {
  CHECK(fdb_moment_sum(MultiIndex{1}, 1.0) == doctest::Approx(1.0));
  CHECK(fdb_moment_sum(MultiIndex{2}, 1.0) == doctest::Approx(2.0));
  CHECK(fdb_moment_sum(MultiIndex{2}, 2.0) == doctest::Approx(6.0));
  // Independent oracle in one variable: Σ over compositions of k of A^{parts} = A(1+A)^{k-1}.
  for (double A : {0.5, 1.0, 3.0})
    for (int k = 1; k <= 8; ++k)
      CHECK(fdb_moment_sum(MultiIndex{k}, A) == doctest::Approx(A * std::pow(1 + A, k - 1)).epsilon(1e-12));
  for (int p = 1; p <= 2; ++p)
    for (double A : {0.5, 2.0}) {
      double prev = fdb_moment_sum(MultiIndex{1, 0}, A, p), worst = 0;
      for (int k = 2; k <= 8; ++k) {
        MultiIndex a{k / 2 + k % 2, k / 2};
        double cur = fdb_moment_sum(a, A, p);
        worst = std::max(worst, cur / prev);
        prev = cur;
      }
      CHECK(worst < 64.0);
    }
  CHECK_THROWS_AS(fdb_moment_sum(MultiIndex{1}, 0.0), PreconditionError);
}

TEST_CASE("partition factorial bound holds exactly for |alpha| <= 8") {
  for (int n = 1; n <= 2; ++n)
    for (int p = 1; p <= 2; ++p)
      for (int k = 1; k <= 8; ++k)
        for (const auto& alpha : indices_of_order(static_cast<std::size_t>(n), k))
          for (const auto& t : faa_di_bruno_terms(alpha, p)) {
            CHECK(partition_factorial_bound(t, alpha, 1));
            CHECK(partition_factorial_bound(t, alpha, 2));
          }
}

TEST_CASE("gevrey_seminorm examples and monotonicity") {
  auto one = SampledFunction::constant(1, 1.0);
  CHECK(gevrey_seminorm(one, GevreyParams{2.0, 0.3, 8}, Box{{0.0}, {1.0}}) == doctest::Approx(1.0));

  auto lin = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int o) {
    return Jet::variable(JetLayout::get(1, o), 0, p[0]);
  });
  CHECK(gevrey_seminorm(lin, GevreyParams{2.0, 1.0, 3}, Box{{0.0}, {2.0}}) == doctest::Approx(2.0));

  auto ex = SampledFunction::from_jet(Box::unbounded(1), [](Point p, int o) {
    return exp(Jet::variable(JetLayout::get(1, o), 0, p[0]));
  });
  // Oracle: max_k e / (h^k k!^s) with the sup of e^x on [0,1] attained at x = 1.
  for (double s : {1.5, 2.0}) {
    double expected = 0.0;
    for (int k = 0; k <= 4; ++k) expected = std::max(expected, std::exp(1.0) / (std::pow(0.5, k) * std::pow(factorial(k), s)));
    CHECK(gevrey_seminorm(ex, GevreyParams{s, 0.5, 4}, Box{{0.0}, {1.0}}) == doctest::Approx(expected));
  }

  double prev = 0.0;
  for (int cap = 0; cap <= 6; ++cap) {
    double v = gevrey_seminorm(ex, GevreyParams{2.0, 0.3, cap}, Box{{0.0}, {1.0}});
    CHECK(v >= prev);
    prev = v;
  }
  prev = 1e300;
  for (double h : {0.1, 0.2, 0.5, 1.0, 2.0}) {
    double v = gevrey_seminorm(ex, GevreyParams{2.0, h, 6}, Box{{0.0}, {1.0}});
    CHECK(v <= prev);
    prev = v;
  }

  CHECK_THROWS_AS(gevrey_seminorm(ex, GevreyParams{2.0, 0.0, 4}, Box{{0.0}, {1.0}}), ParameterError);
  CHECK_THROWS_AS(gevrey_seminorm(ex, GevreyParams{1.0, 0.5, 4}, Box{{0.0}, {1.0}}), ParameterError);
  auto bounded = SampledFunction::from_values(Box{{0.0}, {1.0}}, [](Point p) { return Complex(p[0]); });
  CHECK_THROWS_AS(gevrey_seminorm(bounded, GevreyParams{2.0, 1.0, 1}, Box{{0.0}, {2.0}}), DomainError);
}

TEST_CASE("gevrey_bump values") {
  auto b = gevrey_bump(2.0, 1.0, 2.0, 1);
  double x = 0.5;
  CHECK(b.value(Point(&x, 1)).real() == 1.0);
  x = 4.0;
  CHECK(b.value(Point(&x, 1)).real() == 0.0);
  x = 1.5;
  CHECK(b.value(Point(&x, 1)).real() == doctest::Approx(0.5).epsilon(1e-15));
  double p2[2] = {1.5 / std::sqrt(2.0), -1.5 / std::sqrt(2.0)};
  auto b2 = gevrey_bump(2.0, 1.0, 2.0, 2);
  CHECK(b2.value(Point(p2, 2)).real() == doctest::Approx(0.5));
  CHECK_THROWS_AS(gevrey_bump(1.0, 1.0, 2.0, 1), ParameterError);
  CHECK_THROWS_AS(gevrey_bump(2.0, 2.0, 1.0, 1), ParameterError);
  REQUIRE(b.declared_gevrey().has_value());
  CHECK(b.declared_gevrey()->s == 2.0);
}

TEST_CASE("gevrey_bump derivatives vanish at the outer radius") {
  for (double s : {1.5, 2.0, 3.0}) {
    auto b = gevrey_bump(s, 0.2, 0.4, 1);
    for (double x : {0.4, 0.39999, -0.4}) {
      Jet j = b.jet(Point(&x, 1), 6);
      for (int k = 0; k <= 6; ++k) CHECK(std::abs(j.derivative(MultiIndex{k})) < 1e-8);
    }
  }
}

TEST_CASE("gevrey_bump derivatives match independent jet arithmetic") {
  for (double s : {1.5, 2.0}) {
    const double a = 1.0 / (s - 1.0), rin = 0.2, rout = 0.4;
    auto b = gevrey_bump(s, rin, rout, 2);
    for (double r : {0.25, 0.3, 0.37}) {
      double p[2] = {r * 0.6, r * 0.8};
      const JetLayout* L = JetLayout::get(2, 5);
      Jet x = Jet::variable(L, 0, p[0]), y = Jet::variable(L, 1, p[1]);
      Jet rad = sqrt(x * x + y * y);
      Jet v = (rout - rad) / (rout - rin);
      Jet A = exp(-pow(v, -a)), B = exp(-pow(1.0 - v, -a));
      Jet expected = A / (A + B);
      Jet got = b.jet(Point(p, 2), 5);
      for (std::size_t i = 0; i < got.size(); ++i) {
        const MultiIndex& al = L->index(i);
        const Complex e = expected.derivative(al);
        CHECK(std::abs(got.derivative(al) - e) <= 1e-9 * std::max(1.0, std::abs(e)));
      }
    }
  }
}

TEST_CASE("gevrey_bump declared seminorm is finite and the bump is Gevrey-scaled") {
  auto b = gevrey_bump(2.0, 0.2, 0.4, 1);
  const auto g = *b.declared_gevrey();
  const double norm = gevrey_seminorm(b, g, Box{{-0.5}, {0.5}}, 101);
  CHECK(norm >= 1.0);
  CHECK(norm < 10.0);
}
