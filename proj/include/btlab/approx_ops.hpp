#pragma once

#include "btlab/quadrature.hpp"
#include "btlab/structure.hpp"

#include <optional>
#include <string>
#include <vector>

namespace btlab {

/// τ, the cutoff χ on R^m (1 on B_{R/2}, supported in B_R) and the numerical setup.
struct ApproxConfig {
  double tau = 100.0;
  SampledFunction chi;
  QuadratureRule rule;
  StructureMap structure;
  DomainRadii radii;

  /// Throws ParameterError if τ <= 0, χ has the wrong dimension, or the sampled
  /// plateau/support checks fail.
  void validate() const;
  ApproxConfig with_tau(double t) const;
};

/// Integration window: the cube of half-width multiplier·√(2/τ) around x clipped to [-R, R]^m.
/// Empty if nothing of supp χ remains.
std::optional<Box> gaussian_window(const ApproxConfig& cfg, Point x);

/// χ = gevrey_bump(s, plateau, support, m); plateau and support default to R/2 and R.
ApproxConfig make_config(StructureMap S, DomainRadii radii, double tau, double s = 2.0,
                         std::optional<double> plateau = {}, std::optional<double> support = {});

/// weight · t_profile(t) · (-1)^{|order|} ∂_x^{order} acting at x0.
struct PointFunctional {
  std::vector<double> location;
  MultiIndex order;
  Complex weight = 1.0;
  SampledFunction t_profile;  // on R^n
};

/// Smooth density on R^{m+n} plus finitely many point functionals.
struct DistributionData {
  std::optional<SampledFunction> density;
  std::vector<PointFunctional> points;
};

// (τ/π)^{m/2} ∫ e^{-τ⟨Z(x,t)-Z(y,s)⟩²} χ(y) u(y,s) det Z_x(y,s) dy with s = 0 (E), s = t (G).
Complex E_tau(const SampledFunction& u, const ApproxConfig& cfg, Point p);
Complex E_tau(const DistributionData& u, const ApproxConfig& cfg, Point p);
Complex G_tau(const SampledFunction& u, const ApproxConfig& cfg, Point p);
Complex G_tau(const DistributionData& u, const ApproxConfig& cfg, Point p);
Complex R_tau_direct(const SampledFunction& u, const ApproxConfig& cfg, Point p);
Complex R_tau_direct(const DistributionData& u, const ApproxConfig& cfg, Point p);

/// (τ/π)^{m/2} ∫ e^{-τ⟨z-Z(y,s)⟩²} χ(y) g(y,s) det Z_x(y,s) dy with a free argument z ∈ C^m.
/// At z = Z(x,t), s = t this is G_tau(g, cfg, (x,t)).
Complex G_tau_free(const SampledFunction& g, const ApproxConfig& cfg, std::span<const Complex> z, Point s);

/// Path-integral form over the annulus R/2 < |y| < R and r ∈ [0, 1].
Complex R_tau_stokes(const SampledFunction& u, const ApproxConfig& cfg, Point p);
Complex R_tau_stokes(const DistributionData& u, const ApproxConfig& cfg, Point p);

/// max_j sup over sampled V̄ of |L_j u|; solutions have a tiny value.
double solution_residual(const StructureMap& S, const SampledFunction& u, double R, int per_axis = 9);

struct CommutatorResult {
  Complex lhs, rhs;
  double residual = 0.0;
};
/// X G^χ[u] by differentiating the kernel under the integral, against G^χ[Xu] + G^{Xχ}[u].
CommutatorResult commutator_check(const SampledFunction& u, const ApproxConfig& cfg, VectorField X, Point p);

/// X^α applied to G^χ[u], E^χ[u] at a point, for every α with |α| <= cap in
/// graded order (α ∈ N^N, M-part first). Each result is one value per α.
std::vector<Complex> X_alpha_G(const SampledFunction& u, const ApproxConfig& cfg, int cap, Point p);
std::vector<Complex> X_alpha_E(const SampledFunction& u, const ApproxConfig& cfg, int cap, Point p);

/// P(Z) = Σ_{|γ| <= D} c_γ Z^γ from the exponential series truncated at k <= D/2.
struct PolynomialApproximant {
  int m = 1;
  int degree = 0;
  std::vector<Complex> coeffs;  // layout JetLayout::get(m, degree)
  /// (τ/π)^{m/2} ∫ |χ u det Z_x| r_K(τQ) + point terms; infinite if a point functional has order > 0.
  double tail_bound = 0.0;
  Complex coefficient(const MultiIndex& gamma) const;
  Complex operator()(std::span<const Complex> z) const;
};
PolynomialApproximant polynomial_approximant(const SampledFunction& u, const ApproxConfig& cfg, int degree);
PolynomialApproximant polynomial_approximant(const DistributionData& u, const ApproxConfig& cfg, int degree);

/// sup over the U grid of |E_τ u|. Requires density absent and every t_profile(0) = 0.
double vanishing_trace_check(const DistributionData& u, const ApproxConfig& cfg, int per_axis = 17);

enum class SweepMode { G_to_chi_u, R_decay, E_to_u };
std::string to_string(SweepMode m);

struct SweepOptions {
  int grid_per_axis = 17;
  int gevrey_order_cap = 2;
  std::optional<double> h;  // defaults to the declared Gevrey scales of u and χ
};

struct ConvergenceReport {
  SweepMode mode{};
  std::vector<double> tau_grid, sup_errors, gevrey_errors, bound_values;
  double fitted_slope = 0.0;     // log error vs log τ (mode G)
  double fitted_exp_rate = 0.0;  // log error vs τ over the upper half (mode R)
  bool strictly_decreasing = false;
  bool bound_dominates = false;
  std::size_t grid_points = 0;
  std::vector<std::string> flags;
};

/// Constants of the τ^{-1/2} bound for G_τ[u] - χu from sampled C¹ norms.
struct GBoundConstants {
  double C_I = 0.0, C_J = 0.0;
  double total() const { return C_I + C_J; }
};
GBoundConstants g_bound_constants(const SampledFunction& u, const ApproxConfig& cfg, int per_axis = 17);

ConvergenceReport convergence_sweep(const SampledFunction& u, const ApproxConfig& cfg, std::span<const double> taus,
                                    SweepMode mode, const SweepOptions& opt = {});

/// Least-squares slope of ys against xs.
double least_squares_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace btlab
