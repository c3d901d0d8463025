#pragma once

#include "btlab/multi_index.hpp"
#include "btlab/sampled_function.hpp"

#include <functional>
#include <span>
#include <vector>

namespace btlab {

/// One element of S_α: distinct nonzero δ_1..δ_ℓ in Z^n with nonzero β_j in Z^p,
/// α = Σ|β_j| δ_j and κ = Σ β_j.
struct PartitionTerm {
  MultiIndex kappa;
  std::vector<MultiIndex> deltas;
  std::vector<MultiIndex> betas;
  /// α! / Π_j (β_j! δ_j!^{|β_j|}), the combinatorial weight of the term.
  double coefficient = 0.0;

  std::size_t length() const { return deltas.size(); }
};

/// Enumerates S_α for an inner map with p components, ordered by ℓ, then
/// lexicographically on the δ list, then on the β list.
std::vector<PartitionTerm> faa_di_bruno_terms(const MultiIndex& alpha, int p);

/// Memoized variant shared across threads.
const std::vector<PartitionTerm>& cached_faa_di_bruno_terms(const MultiIndex& alpha, int p);

/// ∂^κ f evaluated at g(x).
using OuterDerivative = std::function<Complex(const MultiIndex& kappa)>;
/// ∂^δ g_c evaluated at x.
using InnerDerivative = std::function<Complex(std::size_t component, const MultiIndex& delta)>;

/// ∂^α (f∘g)(x) as the Faà di Bruno sum over S_α.
Complex faa_di_bruno_sum(const MultiIndex& alpha, int p, const OuterDerivative& outer,
                         const InnerDerivative& inner);

/// ∂^α (f∘g)(x) for real-valued inner components g_1..g_p.
Complex compose_derivative(const SampledFunction& f, std::span<const SampledFunction> g,
                           const MultiIndex& alpha, Point x);

struct PhaseDerivative {
  Complex value;
  /// h^{|α|} |α|!^s e^{τ Re f + s τ^{1/s}} Σ_{S_α} κ!/Πβ_j! C^{|κ|}.
  double bound = 0.0;
  bool within_bound = false;
};

/// ∂^α e^{τ f}(x) through the Faà di Bruno sum with outer map w ↦ e^{τ w}.
Complex exp_phase_derivative(double tau, const SampledFunction& f, const MultiIndex& alpha, Point x);

/// Jet of e^{τ f} from the jet of f, one Faà di Bruno sum per coefficient.
Jet exp_phase_jet(double tau, const Jet& f);

/// Same value plus the Gevrey bound built from f's declared (s, h) and the
/// pointwise constant C = max_{1<=|δ|<=|α|} |∂^δ f(x)| / (h^{|δ|} δ!^s).
PhaseDerivative exp_phase_derivative_checked(double tau, const SampledFunction& f, const MultiIndex& alpha,
                                             Point x);

/// Integer coefficients c_k of Σ_{S_α} κ!/(β_1!…β_ℓ!) A^{|κ|} = Σ_k c_k A^k.
std::vector<BigInt> fdb_moment_polynomial(const MultiIndex& alpha, int p = 1);
double fdb_moment_sum(const MultiIndex& alpha, double A, int p = 1);

/// |κ|!^t Π_j |δ_j|!^{t|β_j|} <= |α|!^t for integer t >= 1, in exact arithmetic.
bool partition_factorial_bound(const PartitionTerm& term, const MultiIndex& alpha, int t);

}  // namespace btlab
