#include "btlab/errors.hpp"
#include "btlab/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace btlab;

TEST_CASE("Gauss-Legendre nodes integrate polynomials exactly") {
  for (int n : {8, 17, 64}) {
    const auto& g = gauss_legendre(n);
    REQUIRE(g.x.size() == static_cast<std::size_t>(n));
    double wsum = 0.0;
    for (double w : g.w) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    // ∫_{-1}^{1} x^{2k} = 2/(2k+1) for 2k <= 2n-1.
    for (int k = 0; 2 * k <= 2 * n - 1; k += 3) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * std::pow(g.x[i], 2 * k);
      CHECK(s == doctest::Approx(2.0 / (2 * k + 1)).epsilon(1e-12));
    }
    for (std::size_t i = 1; i < g.x.size(); ++i) CHECK(g.x[i] > g.x[i - 1]);
  }
}

TEST_CASE("integrate_rm examples") {
  QuadratureRule rule;
  auto gauss = [](Point y) { return Complex(std::exp(-y[0] * y[0])); };
  CHECK(std::abs(integrate_rm(gauss, rule, Box{{-8.0}, {8.0}}) - std::sqrt(std::numbers::pi)) < 1e-10);

  const double tau = 50;
  auto normalized = [tau](Point y) { return Complex(std::sqrt(tau / std::numbers::pi) * std::exp(-tau * y[0] * y[0])); };
  CHECK(std::abs(integrate_rm(normalized, rule, Box{{-2.0}, {2.0}}) - 1.0) < 1e-10);

  auto odd = [](Point y) { return Complex(y[0] * std::exp(-y[0] * y[0])); };
  CHECK(std::abs(integrate_rm(odd, rule, Box{{-3.0}, {3.0}})) < 1e-12);

  auto two_d = [](Point y) { return Complex(std::exp(-y[0] * y[0] - y[1] * y[1])); };
  QuadratureRule coarse{QuadratureRule::Kind::GaussLegendre, 32, 2, 12};
  CHECK(std::abs(integrate_rm(two_d, coarse, Box{{-7.0, -7.0}, {7.0, 7.0}}) - std::numbers::pi) < 1e-10);

  CHECK_THROWS_AS(integrate_rm(gauss, rule, Box{{1.0}, {1.0}}), ParameterError);
  CHECK_THROWS_AS(integrate_rm(gauss, QuadratureRule{QuadratureRule::Kind::GaussLegendre, 4, 1, 12}, Box{{0.0}, {1.0}}),
                  ParameterError);
}

TEST_CASE("Gaussian normalization with a tau-scaled window") {
  QuadratureRule rule;
  for (double tau : {1.0, 10.0, 1e3, 1e5}) {
    const double half = rule.truncation_radius_multiplier / std::sqrt(tau);
    auto f = [tau](Point y) { return Complex(std::sqrt(tau / std::numbers::pi) * std::exp(-tau * y[0] * y[0])); };
    CHECK(std::abs(integrate_rm(f, rule, Box{{-half}, {half}}) - 1.0) < 1e-10);
  }
}

TEST_CASE("refinement self-consistency") {
  QuadratureRule rule{QuadratureRule::Kind::GaussLegendre, 16, 2, 12};
  auto f = [](Point y) { return std::exp(Complex(-y[0] * y[0], 3 * y[0])); };
  auto est = integrate_rm_checked(f, rule, Box{{-6.0}, {6.0}});
  const Complex exact = std::sqrt(std::numbers::pi) * std::exp(-9.0 / 4);
  CHECK(std::abs(est.value - exact) <= 10 * std::max(est.error, 1e-15));

  QuadratureRule trap{QuadratureRule::Kind::Trapezoid, 64, 4, 12};
  // The trapezoid rule is spectrally accurate for decaying analytic integrands.
  CHECK(std::abs(integrate_rm(f, trap, Box{{-9.0}, {9.0}}) - exact) < 1e-12);
}

TEST_CASE("integrate_path examples") {
  QuadratureRule rule;
  double t3[3] = {0.5, -1.0, 2.0};
  CHECK(std::abs(integrate_path([](double) { return std::vector<Complex>(3, 1.0); }, t3, rule) - 1.5) < 1e-14);
  double e1[2] = {1.0, 0.0};
  CHECK(std::abs(integrate_path([](double r) { return std::vector<Complex>{r, r}; }, e1, rule) - 0.5) < 1e-14);
  CHECK(std::abs(integrate_path([](double r) { return std::vector<Complex>{r * r, 0.0}; }, e1, rule) - 1.0 / 3) < 1e-14);
}
