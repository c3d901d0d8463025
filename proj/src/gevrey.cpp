#include "btlab/gevrey.hpp"

#include "btlab/errors.hpp"
#include "btlab/faa_di_bruno.hpp"

#include <algorithm>
#include <cmath>

namespace btlab {

double gevrey_seminorm(const SampledFunction& f, const GevreyParams& params, const Box& K,
                       int grid_points_per_axis) {
  if (!(params.h > 0)) throw ParameterError("gevrey_seminorm: h must be positive");
  params.validate();
  if (grid_points_per_axis < 1) throw ParameterError("gevrey_seminorm: grid needs at least one point");
  if (!f.domain().contains(K)) throw DomainError("gevrey_seminorm: K exceeds the function domain");
  double best = 0.0;
  for (const auto& p : box_grid(K, grid_points_per_axis)) {
    const Jet j = f.jet(Point(p), params.order_cap);
    for (std::size_t i = 0; i < j.size(); ++i) {
      const MultiIndex& a = j.layout()->index(i);
      const double scale = std::pow(params.h, a.order()) * std::pow(factorial(a), params.s);
      best = std::max(best, std::abs(j.derivative(a)) / scale);
    }
  }
  return best;
}

std::vector<double> flat_kernel_derivatives(double a, double u, int K) {
  std::vector<double> d(static_cast<std::size_t>(K) + 1, 0.0);
  if (u <= 0) return d;
  const double w = -std::pow(u, -a);
  if (w < -700) return d;
  const double e = std::exp(w);
  d[0] = e;
  // Inner map u ↦ -u^{-a}: j-th derivative is -(-a)(-a-1)…(-a-j+1) u^{-a-j}.
  std::vector<double> inner(static_cast<std::size_t>(K) + 1);
  double falling = 1.0;
  for (int j = 0; j <= K; ++j) {
    inner[static_cast<std::size_t>(j)] = -falling * std::pow(u, -a - j);
    falling *= (-a - j);
  }
  for (int k = 1; k <= K; ++k) {
    d[static_cast<std::size_t>(k)] =
        faa_di_bruno_sum(
            MultiIndex{k}, 1, [&](const MultiIndex&) { return Complex(e); },
            [&](std::size_t, const MultiIndex& delta) { return Complex(inner[static_cast<std::size_t>(delta[0])]); })
            .real();
  }
  return d;
}

std::vector<double> bump_profile_derivatives(double s, double r_inner, double r_outer, double r, int K) {
  std::vector<double> F(static_cast<std::size_t>(K) + 1, 0.0);
  if (r <= r_inner) {
    F[0] = 1.0;
    return F;
  }
  if (r >= r_outer) return F;
  const double a = 1.0 / (s - 1.0);
  const double width = r_outer - r_inner;
  const double v = (r_outer - r) / width;
  const auto A = flat_kernel_derivatives(a, v, K);
  const auto Bu = flat_kernel_derivatives(a, 1.0 - v, K);
  std::vector<double> D(A.size()), S(A.size());
  for (std::size_t k = 0; k < A.size(); ++k) D[k] = A[k] + ((k % 2) ? -Bu[k] : Bu[k]);
  // Quotient rule for S = A / D, one order at a time.
  for (int k = 0; k <= K; ++k) {
    double acc = A[static_cast<std::size_t>(k)];
    double c = 1.0;
    for (int i = 1; i <= k; ++i) {
      c = c * (k - i + 1) / i;
      acc -= c * D[static_cast<std::size_t>(i)] * S[static_cast<std::size_t>(k - i)];
    }
    S[static_cast<std::size_t>(k)] = acc / D[0];
  }
  double chain = 1.0;
  for (int k = 0; k <= K; ++k) {
    F[static_cast<std::size_t>(k)] = S[static_cast<std::size_t>(k)] * chain;
    chain *= -1.0 / width;
  }
  return F;
}

SampledFunction gevrey_bump(double s, double r_inner, double r_outer, int dim) {
  if (!(s > 1.0)) throw ParameterError("gevrey_bump: s must exceed 1 (quasianalytic classes admit no cutoff)");
  if (!(r_inner > 0.0) || !(r_outer > r_inner)) throw ParameterError("gevrey_bump: need 0 < r_inner < r_outer");
  if (dim < 1) throw ParameterError("gevrey_bump: dim must be positive");

  auto value = [=](Point x) -> Complex {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return bump_profile_derivatives(s, r_inner, r_outer, std::sqrt(r2), 0)[0];
  };

  auto jet = [=](Point x, int order) -> Jet {
    const JetLayout* L = JetLayout::get(dim, order);
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double r = std::sqrt(r2);
    if (r <= r_inner) return Jet(L, 1.0);
    if (r >= r_outer) return Jet(L, 0.0);
    const auto F = bump_profile_derivatives(s, r_inner, r_outer, r, order);
    // Derivatives of ρ = |x|², then r = sqrt(ρ), then F(r), each through the FdB engine.
    auto rho_deriv = [&](std::size_t, const MultiIndex& g) -> Complex {
      if (g.order() == 1)
        for (std::size_t i = 0; i < g.dim(); ++i)
          if (g[i]) return 2.0 * x[i];
      if (g.order() == 2)
        for (std::size_t i = 0; i < g.dim(); ++i)
          if (g[i] == 2) return 2.0;
      return 0.0;
    };
    auto sqrt_deriv = [&](const MultiIndex& k) -> Complex {
      double c = 1.0;
      for (int j = 0; j < k[0]; ++j) c *= (0.5 - j);
      return c * std::pow(r2, 0.5 - k[0]);
    };
    Jet rj(L, r);
    for (std::size_t i = 1; i < L->size(); ++i)
      rj.set_derivative(L->index(i), faa_di_bruno_sum(L->index(i), 1, sqrt_deriv, rho_deriv));
    Jet out(L, F[0]);
    for (std::size_t i = 1; i < L->size(); ++i)
      out.set_derivative(L->index(i),
                         faa_di_bruno_sum(
                             L->index(i), 1,
                             [&](const MultiIndex& k) { return Complex(F[static_cast<std::size_t>(k[0])]); },
                             [&](std::size_t, const MultiIndex& d) { return rj.derivative(d); }));
    return out;
  };

  // Declared scale: the smallest h with sup_r |F^{(k)}| <= h^k k!^s for sampled k <= 8.
  double h = 0.0;
  const int kcap = 8;
  for (int i = 1; i < 400; ++i) {
    const double r = r_inner + (r_outer - r_inner) * i / 400.0;
    const auto F = bump_profile_derivatives(s, r_inner, r_outer, r, kcap);
    for (int k = 1; k <= kcap; ++k)
      h = std::max(h, std::pow(std::abs(F[static_cast<std::size_t>(k)]) / std::pow(factorial(k), s), 1.0 / k));
  }
  return SampledFunction::from_jet(Box::unbounded(static_cast<std::size_t>(dim)), jet, SampledFunction::kUnlimited,
                                   value)
      .with_gevrey(GevreyParams{s, h, kcap});
}

}  // namespace btlab
