#pragma once

#include "btlab/approx_ops.hpp"

#include <compare>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

namespace btlab {

/// Strictly increasing subset of {1, ..., r}; entries are 1-based.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::initializer_list<int> idx);
  explicit IndexSet(std::vector<int> idx);

  /// All k-subsets of {1..r} in lexicographic order.
  static std::vector<IndexSet> all(int r, int k);

  std::size_t size() const { return idx_.size(); }
  bool empty() const { return idx_.empty(); }
  bool contains(int j) const;
  int max() const { return idx_.empty() ? 0 : idx_.back(); }
  IndexSet without(int j) const;
  IndexSet with(int j) const;
  const std::vector<int>& entries() const { return idx_; }
  std::string to_string() const;

  auto operator<=>(const IndexSet&) const = default;

 private:
  std::vector<int> idx_;
};

/// Sign of the permutation sorting (j, J): (-1)^{#{j' ∈ J : j' < j}}. Throws PreconditionError if j ∈ J.
int epsilon_sign(int j, const IndexSet& J);

struct FormKey {
  IndexSet I, J;
  auto operator<=>(const FormKey&) const = default;
};

/// Σ f_IJ dZ_I ∧ dt_J with sparse storage; absent keys are zero.
/// Forms in the t-variables alone use m = 0 and coefficients on R^n.
class FormPQ {
 public:
  FormPQ(int m, int n, int p, int q);

  int m() const { return m_; }
  int n() const { return n_; }
  int p() const { return p_; }
  int q() const { return q_; }
  std::size_t coefficient_dim() const { return static_cast<std::size_t>(m_ + n_); }

  /// Throws ParameterError for a key of the wrong degree or out of range, or a coefficient of the wrong dimension.
  void set(const IndexSet& I, const IndexSet& J, SampledFunction f);
  const SampledFunction* get(const IndexSet& I, const IndexSet& J) const;
  Complex value(const IndexSet& I, const IndexSet& J, Point p) const;
  const std::map<FormKey, SampledFunction>& coefficients() const { return coeffs_; }

 private:
  int m_, n_, p_, q_;
  std::map<FormKey, SampledFunction> coeffs_;
};

/// 𝕃f = Σ L_j f_IJ dt_j ∧ dZ_I ∧ dt_J, reindexed into increasing keys.
FormPQ L_operator(const FormPQ& f, const StructureMap& S);

/// Exterior t-derivative of a form in the t-variables (m = 0).
FormPQ d_t(const FormPQ& F);

/// K^(q)F = Σ_J {∫_0^1 F_J(σt) σ^{q-1} dσ} ω_J for a form in the t-variables.
/// Coefficients are evaluated lazily and carry jets. Throws PreconditionError for q = 0.
FormPQ K_q(const FormPQ& F, const QuadratureRule& sigma_rule = {});

/// max over keys of |F - d_t K^(q) F - K^(q+1) d_t F| at t.
double homotopy_check(const FormPQ& F, Point t, const QuadratureRule& sigma_rule = {});

/// 𝒢_τ^χ applied to each coefficient with free holomorphic argument z.
std::map<FormKey, Complex> G_tau_form(const FormPQ& f, const ApproxConfig& cfg, std::span<const Complex> z, Point t);

/// max over keys of |𝒢_τ^χ[(𝕃f)_IK](Z(x,t), t)|: the aggregate that vanishes for 𝕃-closed f.
double closedness_aggregate(const FormPQ& f, const ApproxConfig& cfg, Point p);

/// Sampled sup over V̄ of the coefficients of 𝕃f.
double closedness_residual(const FormPQ& f, const StructureMap& S, double R, int per_axis = 5);

/// λ*𝒦_τ^{(p,q)}[f, χ] as a (p, q-1)-form with jet-carrying coefficients.
FormPQ K_tau(const FormPQ& f, const ApproxConfig& cfg);

struct PoincareReport {
  std::vector<double> tau_grid, residuals;
  std::vector<std::map<FormKey, double>> per_coefficient;
  std::vector<FormPQ> solutions;
  std::size_t grid_points = 0;
  double closedness = 0.0;
};

/// Builds g_τ = λ*𝒦_τ^{(p,q)}[f, χ] for each τ and measures sup over the U grid of |𝕃g_τ - f|.
/// Refuses (PreconditionError) unless 1 <= q <= n and f is 𝕃-closed to 1e-8 on sampled V̄.
PoincareReport approximate_solve(const FormPQ& f, const ApproxConfig& cfg, std::span<const double> taus,
                                 int grid_per_axis = 5);

}  // namespace btlab
