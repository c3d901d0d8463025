#include "btlab/jet.hpp"
#include "btlab/sampled_function.hpp"

#include <doctest.h>

#include <cmath>

using namespace btlab;

TEST_CASE("multi-index arithmetic and factorials") {
  MultiIndex a{2, 1, 0};
  CHECK(a.order() == 3);
  CHECK(factorial(a) == doctest::Approx(2.0));
  CHECK(MultiIndex{1, 1, 0}.leq(a));
  CHECK_FALSE(MultiIndex{0, 2, 0}.leq(a));
  CHECK(binomial(MultiIndex{4, 2}, MultiIndex{2, 1}) == doctest::Approx(12.0));
  CHECK(lower_set(MultiIndex{1, 2}).size() == 6);
  CHECK(indices_up_to(2, 3).size() == 10);
  CHECK(factorial_big(20) == BigInt("2432902008176640000"));
}

TEST_CASE("jet of exp(x^2) matches closed-form derivatives") {
  const JetLayout* L = JetLayout::get(1, 5);
  const double x = 0.7;
  Jet X = Jet::variable(L, 0, x);
  Jet f = exp(X * X);
  const double e = std::exp(x * x);
  CHECK(f.derivative(MultiIndex{1}).real() == doctest::Approx(2 * x * e));
  CHECK(f.derivative(MultiIndex{2}).real() == doctest::Approx((2 + 4 * x * x) * e));
  CHECK(f.derivative(MultiIndex{3}).real() == doctest::Approx((12 * x + 8 * x * x * x) * e));
}

TEST_CASE("jet arithmetic identities") {
  const JetLayout* L = JetLayout::get(2, 4);
  Jet x = Jet::variable(L, 0, 0.3), y = Jet::variable(L, 1, -0.4);
  Jet f = sin(x * y) + cos(x) * exp(y);
  SUBCASE("reciprocal") {
    Jet g = f * f.reciprocal();
    CHECK(std::abs(g.value() - 1.0) < 1e-14);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(std::abs(g.coeff(i)) < 1e-13);
  }
  SUBCASE("integer power agrees with repeated product") {
    Jet p = pow(f, 3), q = f * f * f;
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p.coeff(i) - q.coeff(i)) < 1e-13);
  }
  SUBCASE("sqrt squared") {
    Jet s = sqrt(f + 2.0);
    Jet t = s * s - (f + 2.0);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(t.coeff(i)) < 1e-13);
  }
  SUBCASE("partial derivative of a product") {
    Jet d = (x * y * y).partial(1);
    CHECK(d.value().real() == doctest::Approx(2 * 0.3 * -0.4));
    CHECK(d.order() == 3);
  }
}

TEST_CASE("multivariate jet composition agrees with direct arithmetic") {
  const JetLayout* L = JetLayout::get(2, 5);
  Jet x = Jet::variable(L, 0, 0.2), y = Jet::variable(L, 1, 0.5);
  Jet u = x * y + 0.1, v = sin(x) - y;
  const JetLayout* O = JetLayout::get(2, 5);
  Jet a = Jet::variable(O, 0, u.value()), b = Jet::variable(O, 1, v.value());
  Jet outer = exp(a) * b * b;
  Jet inner[2] = {u, v};
  Jet c = compose(outer, inner);
  Jet direct = exp(u) * v * v;
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c.coeff(i) - direct.coeff(i)) < 1e-12);
}

TEST_CASE("remap drops and relabels variables") {
  const JetLayout* L = JetLayout::get(2, 3);
  Jet x = Jet::variable(L, 0, 1.0), t = Jet::variable(L, 1, 2.0);
  Jet f = x * x * t;
  int map_x_only[2] = {0, -1};
  Jet g = remap(f, JetLayout::get(1, 3), map_x_only);
  CHECK(g.derivative(MultiIndex{2}).real() == doctest::Approx(4.0));
  CHECK(g.derivative(MultiIndex{3}).real() == doctest::Approx(0.0));
}

TEST_CASE("finite differences with Richardson step reproduce smooth derivatives") {
  auto f = [](Point p) { return Complex(std::exp(p[0]) * std::sin(2 * p[1])); };
  double pt[2] = {0.3, 0.1};
  Complex d = finite_difference(f, MultiIndex{1, 1}, Point(pt, 2));
  CHECK(std::abs(d.real() - std::exp(0.3) * 2 * std::cos(0.2)) < 1e-7);
  Complex d3 = finite_difference(f, MultiIndex{3, 0}, Point(pt, 2));
  CHECK(std::abs(d3.real() - std::exp(0.3) * std::sin(0.2)) < 1e-5);
}

TEST_CASE("SampledFunction oracles agree at order zero") {
  auto fn = SampledFunction::from_values(Box::cube(1, 1.0), [](Point p) { return Complex(p[0] * p[0]); });
  double x = 0.5;
  CHECK(fn.derivative(MultiIndex{0}, Point(&x, 1)).real() == doctest::Approx(0.25));
  CHECK(fn.jet(Point(&x, 1), 2).value().real() == doctest::Approx(0.25));
  CHECK(fn.derivative(MultiIndex{2}, Point(&x, 1)).real() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK_THROWS(fn.derivative(MultiIndex{7}, Point(&x, 1)));
}
