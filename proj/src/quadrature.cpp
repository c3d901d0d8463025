#include "btlab/quadrature.hpp"

#include "btlab/errors.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace btlab {

void QuadratureRule::validate() const {
  if (points_per_axis < 8) throw ParameterError("quadrature needs at least 8 points per axis");
  if (panels < 1) throw ParameterError("quadrature needs at least one panel");
  if (!(truncation_radius_multiplier > 0)) throw ParameterError("truncation radius multiplier must be positive");
}

QuadratureRule QuadratureRule::refined() const {
  QuadratureRule r = *this;
  r.points_per_axis *= 2;
  return r;
}

const AxisNodes& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<AxisNodes>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (slot) return *slot;
  slot = std::make_unique<AxisNodes>();
  // Nonnegative zeros in increasing order; mirror them for the full set.
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> x, w;
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    x.push_back(-*it);
  }
  for (double z : zeros) x.push_back(z);
  for (double xi : x) {
    const double dp = boost::math::legendre_p_prime(n, xi);
    w.push_back(2.0 / ((1.0 - xi * xi) * dp * dp));
  }
  slot->x = std::move(x);
  slot->w = std::move(w);
  return *slot;
}

AxisNodes axis_nodes(const QuadratureRule& rule, double a, double b) {
  AxisNodes out;
  const int P = rule.panels, n = rule.points_per_axis;
  const double width = (b - a) / P;
  if (rule.kind == QuadratureRule::Kind::GaussLegendre) {
    const auto& ref = gauss_legendre(n);
    for (int p = 0; p < P; ++p) {
      const double lo = a + p * width, half = 0.5 * width;
      for (std::size_t i = 0; i < ref.x.size(); ++i) {
        out.x.push_back(lo + half * (ref.x[i] + 1.0));
        out.w.push_back(half * ref.w[i]);
      }
    }
  } else {
    const int total = P * (n - 1);
    const double h = (b - a) / total;
    for (int i = 0; i <= total; ++i) {
      out.x.push_back(a + h * i);
      out.w.push_back((i == 0 || i == total) ? 0.5 * h : h);
    }
  }
  return out;
}

Complex pairwise_sum(std::span<const Complex> v) {
  if (v.size() <= 8) {
    Complex s = 0.0;
    for (Complex c : v) s += c;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

void integrate_rm(const VectorIntegrand& f, std::size_t k, const QuadratureRule& rule, const Box& window,
                  std::span<Complex> out) {
  rule.validate();
  const std::size_t m = window.dim();
  for (std::size_t i = 0; i < m; ++i)
    if (!(window.hi[i] > window.lo[i]) || !std::isfinite(window.hi[i] - window.lo[i]))
      throw ParameterError("integrate_rm: degenerate or unbounded window");
  std::vector<AxisNodes> axes;
  for (std::size_t i = 0; i < m; ++i) axes.push_back(axis_nodes(rule, window.lo[i], window.hi[i]));
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.x.size();

  std::vector<Complex> terms(total * k);
  std::vector<Complex> vals(k);
  std::vector<double> p(m);
  std::vector<std::size_t> idx(m, 0);
  for (std::size_t n = 0; n < total; ++n) {
    double w = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = axes[i].x[idx[i]];
      w *= axes[i].w[idx[i]];
    }
    f(Point(p), vals);
    for (std::size_t c = 0; c < k; ++c) terms[c * total + n] = w * vals[c];
    for (std::size_t i = 0; i < m; ++i) {
      if (++idx[i] < axes[i].x.size()) break;
      idx[i] = 0;
    }
  }
  for (std::size_t c = 0; c < k; ++c)
    out[c] = pairwise_sum(std::span<const Complex>(terms).subspan(c * total, total));
}

Complex integrate_rm(const Integrand& f, const QuadratureRule& rule, const Box& window) {
  Complex out[1];
  integrate_rm([&](Point p, std::span<Complex> v) { v[0] = f(p); }, 1, rule, window, out);
  return out[0];
}

QuadratureEstimate integrate_rm_checked(const Integrand& f, const QuadratureRule& rule, const Box& window) {
  const Complex a = integrate_rm(f, rule, window);
  const Complex b = integrate_rm(f, rule.refined(), window);
  return {b, std::abs(a - b)};
}

Complex integrate_path(const std::function<std::vector<Complex>(double)>& g, std::span<const double> t,
                       const QuadratureRule& rule) {
  rule.validate();
  const AxisNodes nodes = axis_nodes(rule, 0.0, 1.0);
  std::vector<std::vector<Complex>> per(t.size());
  for (std::size_t i = 0; i < nodes.x.size(); ++i) {
    const auto v = g(nodes.x[i]);
    if (v.size() != t.size()) throw PreconditionError("integrate_path: g must have one component per t_j");
    for (std::size_t j = 0; j < t.size(); ++j) per[j].push_back(nodes.w[i] * v[j]);
  }
  std::vector<Complex> parts;
  for (std::size_t j = 0; j < t.size(); ++j) parts.push_back(t[j] * pairwise_sum(per[j]));
  return pairwise_sum(parts);
}

}  // namespace btlab
