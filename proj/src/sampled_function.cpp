#include "btlab/sampled_function.hpp"

#include "btlab/errors.hpp"

#include <cmath>

namespace btlab {

void GevreyParams::validate() const {
  if (!(s > 1.0)) throw ParameterError("Gevrey order s must exceed 1 (got " + std::to_string(s) + ")");
  if (!(h > 0.0)) throw ParameterError("Gevrey scale h must be positive (got " + std::to_string(h) + ")");
  if (order_cap < 0) throw ParameterError("order_cap must be nonnegative");
}

std::vector<std::vector<double>> box_grid(const Box& K, int per_axis) {
  if (per_axis < 1) throw ParameterError("box_grid needs at least one point per axis");
  const std::size_t d = K.dim();
  std::vector<std::vector<double>> pts;
  std::vector<int> idx(d, 0);
  while (true) {
    std::vector<double> p(d);
    for (std::size_t i = 0; i < d; ++i)
      p[i] = per_axis == 1 ? 0.5 * (K.lo[i] + K.hi[i]) : K.lo[i] + (K.hi[i] - K.lo[i]) * idx[i] / (per_axis - 1);
    pts.push_back(std::move(p));
    std::size_t i = 0;
    for (; i < d; ++i) {
      if (++idx[i] < per_axis) break;
      idx[i] = 0;
    }
    if (i == d) break;
  }
  return pts;
}

std::vector<std::vector<double>> ball_grid(std::size_t d, double r, int per_axis) {
  std::vector<std::vector<double>> out;
  for (auto& p : box_grid(Box::cube(d, r), per_axis)) {
    double q = 0.0;
    for (double v : p) q += v * v;
    if (q <= r * r * (1.0 + 1e-12)) out.push_back(std::move(p));
  }
  return out;
}

Box Box::cube(std::size_t dim, double half_width) {
  return Box{std::vector<double>(dim, -half_width), std::vector<double>(dim, half_width)};
}

Box Box::unbounded(std::size_t dim) { return cube(dim, std::numeric_limits<double>::infinity()); }

bool Box::contains(Point p, double tol) const {
  if (p.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
  return true;
}

bool Box::contains(const Box& inner, double tol) const {
  if (inner.dim() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (inner.lo[i] < lo[i] - tol || inner.hi[i] > hi[i] + tol) return false;
  return true;
}

SampledFunction SampledFunction::from_jet(Box domain, JetOracle jet, int max_order, ValueOracle value) {
  SampledFunction f;
  f.domain_ = std::move(domain);
  f.jet_ = std::move(jet);
  f.value_ = std::move(value);
  f.max_order_ = max_order;
  return f;
}

SampledFunction SampledFunction::from_derivatives(Box domain, ValueOracle value, DerivativeOracle deriv,
                                                  int max_order) {
  SampledFunction f;
  f.domain_ = std::move(domain);
  f.value_ = std::move(value);
  f.deriv_ = std::move(deriv);
  f.max_order_ = max_order;
  return f;
}

SampledFunction SampledFunction::from_values(Box domain, ValueOracle value, int max_order) {
  SampledFunction f;
  double scale = 1.0;
  for (std::size_t i = 0; i < domain.dim(); ++i) {
    double w = domain.hi[i] - domain.lo[i];
    if (std::isfinite(w) && w > 0) scale = std::min(scale, w);
  }
  f.domain_ = std::move(domain);
  f.value_ = value;
  f.deriv_ = [value, scale](const MultiIndex& a, Point p) { return finite_difference(value, a, p, scale); };
  f.max_order_ = max_order;
  return f;
}

SampledFunction SampledFunction::constant(std::size_t dim, Complex c) {
  return from_jet(
      Box::unbounded(dim), [dim, c](Point, int order) { return Jet(static_cast<int>(dim), order, c); },
      kUnlimited, [c](Point) { return c; });
}

SampledFunction SampledFunction::with_gevrey(GevreyParams g) const {
  SampledFunction f(*this);
  f.gevrey_ = g;
  return f;
}

Complex SampledFunction::value(Point p) const {
  if (value_) return value_(p);
  if (jet_) return jet_(p, 0).value();
  throw CapabilityError("empty SampledFunction");
}

Complex SampledFunction::derivative(const MultiIndex& a, Point p) const {
  if (a.order() > max_order_)
    throw CapabilityError("derivative order " + std::to_string(a.order()) + " exceeds oracle depth " +
                          std::to_string(max_order_));
  if (a.is_zero()) return value(p);
  if (deriv_) return deriv_(a, p);
  return jet_(p, a.order()).derivative(a);
}

Jet SampledFunction::jet(Point p, int order) const {
  if (order > max_order_)
    throw CapabilityError("jet order " + std::to_string(order) + " exceeds oracle depth " +
                          std::to_string(max_order_));
  if (jet_) return jet_(p, order);
  Jet j(static_cast<int>(dim()), order);
  const JetLayout* L = j.layout();
  for (std::size_t i = 0; i < L->size(); ++i) {
    const MultiIndex& a = L->index(i);
    j.set_derivative(a, a.is_zero() ? value(p) : deriv_(a, p));
  }
  return j;
}

namespace {

/// Central difference of total order |α| with step h: tensor product of
/// Σ_j (-1)^j C(k,j) f(x + (k/2 - j) h) / h^k along each axis.
Complex central_difference(const SampledFunction::ValueOracle& f, const MultiIndex& alpha, Point x, double h) {
  const std::size_t d = alpha.dim();
  std::vector<int> counter(d, 0);
  std::vector<double> y(x.begin(), x.end());
  Complex sum = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const int k = alpha[i], j = counter[i];
      double c = 1.0;
      for (int r = 1; r <= j; ++r) c = c * (k - j + r) / r;
      w *= ((j % 2) ? -c : c);
      y[i] = x[i] + (0.5 * k - j) * h;
    }
    sum += w * f(Point(y));
    std::size_t i = 0;
    for (; i < d; ++i) {
      if (counter[i] < alpha[i]) {
        ++counter[i];
        break;
      }
      counter[i] = 0;
    }
    if (i == d) break;
  }
  return sum / std::pow(h, alpha.order());
}

}  // namespace

Complex finite_difference(const SampledFunction::ValueOracle& f, const MultiIndex& alpha, Point x, double scale) {
  if (alpha.is_zero()) return f(x);
  const double eps = std::numeric_limits<double>::epsilon();
  const double h = std::pow(eps, 1.0 / (alpha.order() + 2)) * scale * 4.0;
  const Complex coarse = central_difference(f, alpha, x, h);
  const Complex fine = central_difference(f, alpha, x, h / 2);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace btlab
