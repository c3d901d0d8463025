#pragma once

#include "btlab/sampled_function.hpp"

#include <functional>
#include <span>
#include <vector>

namespace btlab {

struct QuadratureRule {
  enum class Kind { GaussLegendre, Trapezoid };
  Kind kind = Kind::GaussLegendre;
  int points_per_axis = 64;  // per panel
  int panels = 4;
  /// Half-width of Gaussian windows in units of τ^{-1/2}.
  double truncation_radius_multiplier = 12.0;

  void validate() const;
  QuadratureRule refined() const;
};

/// Nodes and weights on [a, b] for one axis of the rule.
struct AxisNodes {
  std::vector<double> x, w;
};
AxisNodes axis_nodes(const QuadratureRule& rule, double a, double b);

/// Gauss-Legendre nodes and weights on [-1, 1], cached per n.
const AxisNodes& gauss_legendre(int n);

/// Pairwise summation of complex terms.
Complex pairwise_sum(std::span<const Complex> v);

using Integrand = std::function<Complex(Point)>;
/// Fills `out` (size k) with the values of k integrands at a point.
using VectorIntegrand = std::function<void(Point, std::span<Complex>)>;

/// Tensor rule over a box in R^m. Throws ParameterError for a degenerate window.
Complex integrate_rm(const Integrand& f, const QuadratureRule& rule, const Box& window);
void integrate_rm(const VectorIntegrand& f, std::size_t k, const QuadratureRule& rule, const Box& window,
                  std::span<Complex> out);

struct QuadratureEstimate {
  Complex value;
  double error;  // |result(points) - result(2·points)|
};
QuadratureEstimate integrate_rm_checked(const Integrand& f, const QuadratureRule& rule, const Box& window);

/// Σ_j t_j ∫_0^1 g_j(r) dr.
Complex integrate_path(const std::function<std::vector<Complex>(double)>& g, std::span<const double> t,
                       const QuadratureRule& rule);

}  // namespace btlab
