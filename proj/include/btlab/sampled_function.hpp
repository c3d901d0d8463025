#pragma once

#include "btlab/jet.hpp"
#include "btlab/multi_index.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace btlab {

using Point = std::span<const double>;

/// Gevrey order s, scale h and the derivative cap used by finite truncations.
struct GevreyParams {
  double s = 2.0;
  double h = 1.0;
  int order_cap = 8;

  /// Throws ParameterError unless s > 1, h > 0, order_cap >= 0.
  void validate() const;
};

/// Axis-aligned box lo <= x <= hi.
struct Box {
  std::vector<double> lo, hi;

  static Box cube(std::size_t dim, double half_width);
  static Box unbounded(std::size_t dim);
  std::size_t dim() const { return lo.size(); }
  bool contains(Point p, double tol = 1e-12) const;
  bool contains(const Box& inner, double tol = 1e-12) const;
};

/// Tensor grid on a box including the endpoints (one point per axis gives the midpoint).
std::vector<std::vector<double>> box_grid(const Box& K, int per_axis);
/// Grid on the closed ball of radius r in R^d (cube grid filtered by radius).
std::vector<std::vector<double>> ball_grid(std::size_t d, double r, int per_axis);

/// Value and derivative oracle for a complex function on a box in R^d.
///
/// The primary oracle is a jet: Taylor coefficients to a requested order at a
/// point. Functions built from closed forms supply exact jets; functions known
/// only by values fall back to Richardson-extrapolated central differences.
class SampledFunction {
 public:
  using ValueOracle = std::function<Complex(Point)>;
  using JetOracle = std::function<Jet(Point, int order)>;
  using DerivativeOracle = std::function<Complex(const MultiIndex&, Point)>;

  static constexpr int kUnlimited = std::numeric_limits<int>::max();

  SampledFunction() = default;

  /// Exact jets; `value` is an optional fast path that must agree with the jet at order 0.
  static SampledFunction from_jet(Box domain, JetOracle jet, int max_order = kUnlimited,
                                  ValueOracle value = {});
  /// Exact partial derivatives supplied one multi-index at a time.
  static SampledFunction from_derivatives(Box domain, ValueOracle value, DerivativeOracle deriv,
                                          int max_order = kUnlimited);
  /// Value-only oracle; derivatives by central differences with Richardson extrapolation.
  static SampledFunction from_values(Box domain, ValueOracle value, int max_order = 6);
  static SampledFunction constant(std::size_t dim, Complex c);

  bool valid() const { return static_cast<bool>(jet_) || static_cast<bool>(value_); }
  std::size_t dim() const { return domain_.dim(); }
  const Box& domain() const { return domain_; }
  int max_order() const { return max_order_; }
  const std::optional<GevreyParams>& declared_gevrey() const { return gevrey_; }
  SampledFunction with_gevrey(GevreyParams g) const;

  Complex value(Point p) const;
  Complex operator()(Point p) const { return value(p); }
  Complex derivative(const MultiIndex& a, Point p) const;
  /// Taylor jet at p in dim() variables; throws CapabilityError beyond max_order().
  Jet jet(Point p, int order) const;

 private:
  Box domain_;
  ValueOracle value_;
  JetOracle jet_;
  DerivativeOracle deriv_;
  int max_order_ = 0;
  std::optional<GevreyParams> gevrey_;
};

/// Central-difference estimate of ∂^α f(x) with one Richardson step; the base
/// step is eps^{1/(|α|+2)} times `scale`.
Complex finite_difference(const SampledFunction::ValueOracle& f, const MultiIndex& alpha, Point x,
                          double scale = 1.0);

}  // namespace btlab
