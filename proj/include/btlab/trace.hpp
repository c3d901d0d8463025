#pragma once

#include "btlab/approx_ops.hpp"

#include <iosfwd>
#include <vector>

namespace btlab {

/// Cutoff λ on W and the sampling used for the discrete transform.
/// The grid covers the cube [-half_width, half_width]^{m+n} with `grid` points per axis.
struct SpectralCutoff {
  int m = 1, n = 1;
  double R = 1.0;
  SampledFunction lambda;
  double half_width = 1.5;
  int grid = 512;
  int padding = 4;

  /// Throws ParameterError if λ is not 1 on the sampled V̄, not 0 at the cube boundary,
  /// or the grid is too small.
  void validate() const;
  std::size_t dim() const { return static_cast<std::size_t>(m + n); }
  double spacing() const { return 2.0 * half_width / grid; }
};

/// (a ⊗ b)(x, y) = a(x) b(y) with exact jets.
SampledFunction tensor_product(const SampledFunction& a, const SampledFunction& b);

/// λ(x, t) = bump(x)·bump(t), each equal to 1 up to radius R and vanishing from `outer` on.
/// The sampling cube is [-outer, outer].
SpectralCutoff make_cutoff(int m, int n, double R, double outer, double s = 2.0, int grid = 512, int padding = 4);

/// ℱ(λu)(ξ) = ∫ λu e^{i⟨y,ξ⟩} dy sampled on a tensor frequency grid.
/// `values` is row-major over the m+n axes (last axis fastest), axes in ascending frequency.
struct SpectralData {
  int m = 0, n = 0;
  std::vector<double> frequencies;  // shared by every axis
  double step = 0.0;                // frequency spacing
  std::vector<Complex> values;

  std::size_t axis_size() const { return frequencies.size(); }
  Complex at(std::span<const std::size_t> idx) const;
  /// Writes σ, θ, Re, Im rows (m = n = 1 only).
  void write_csv(std::ostream& os) const;
};

/// Density part by FFT of λ·density on the zero-padded grid; point functionals in closed form.
/// Throws PreconditionError for points outside B_{R/2} and ResolutionError when the
/// transform has not decayed at the edge of the frequency grid.
SpectralData fourier_of(const DistributionData& u, const SpectralCutoff& cutoff, double tail_tol = 1e-9);

struct TraceOptions {
  // Absolute bound on the integrand mass in the outer frequency band. The mass overstates
  // the truncation error by one to two orders of magnitude on smooth inputs.
  double tail_tol = 1e-6;
};

/// (2π)^{-N} ∫ ℱ(λu)(σ,θ) e^{-i⟨t,θ⟩} (∫ φ(x) e^{-i⟨x,σ⟩} dx) dσ dθ on the spectral grid.
Complex trace_at(const SpectralData& F, const SpectralCutoff& cutoff, Point t, const SampledFunction& phi,
                 const TraceOptions& opt = {});
Complex trace_at(const DistributionData& u, const SpectralCutoff& cutoff, Point t, const SampledFunction& phi,
                 const TraceOptions& opt = {});

/// The trace paired with a fixed φ, reduced over σ once so that t-evaluations are cheap.
class TracePairing {
 public:
  /// Throws PreconditionError if φ does not vanish outside B_R.
  TracePairing(const SpectralData& F, const SpectralCutoff& cutoff, const SampledFunction& phi,
               TraceOptions opt = {});

  /// ∂_t^β (ι_t*u)(φ): the integrand gains the factor (-iθ)^β.
  /// Throws ResolutionError when the outer frequency band carries more than opt.tail_tol.
  Complex value(Point t, const MultiIndex& beta) const;
  Complex value(Point t) const;
  /// Mass of |integrand| in the outer frequency band at (t, β).
  double tail(Point t, const MultiIndex& beta) const;
  /// Value and band mass without the tolerance check; the band mass bounds the truncation error in practice.
  Complex evaluate(Point t, const MultiIndex& beta, double* tail) const;

 private:

  int n_;
  std::size_t per_axis_;
  std::vector<double> freq_;
  double norm_;
  TraceOptions opt_;
  std::vector<Complex> reduced_;
  std::vector<double> mass_, band_mass_;
};

struct TraceRegularity {
  std::vector<std::vector<double>> t_grid;
  std::vector<MultiIndex> orders;                 // |β| <= order_cap, graded
  std::vector<std::vector<Complex>> derivatives;  // [t][β]
  std::vector<std::vector<double>> tails;         // outer-band mass of each entry
  double C = 0.0, b = 0.0, s = 2.0;
  double worst_ratio = 0.0;  // max (|∂^β| + tail) / (C b^{|β|} |β|!^s)
  bool gevrey_certificate = false;
};

/// Derivative table and the check |∂_t^β| + tail <= C b^{|β|} |β|!^s, with C fitted on |value| + tail
/// at order 0 and b at order 1 (floored at 1). Throws ParameterError for order_cap > 6 and
/// ResolutionError when an order-0 entry fails the tail tolerance.
TraceRegularity trace_t_regularity(const DistributionData& u, const SpectralCutoff& cutoff,
                                   const SampledFunction& phi, const std::vector<std::vector<double>>& t_grid,
                                   int order_cap, double s = 2.0, const TraceOptions& opt = {});

struct FourierDecayReport {
  bool ok = true;
  double slack = 0.0;        // max |ℱφ| / bound
  double worst_xi = 0.0;
  double seminorm = 0.0;     // capped ‖φ‖_{r, B_R}
  double fitted_exponent = 0.0;  // κ in -log|ℱφ| ~ c |ξ|^κ over envelope maxima
  std::vector<double> xi, magnitude, bound;
};

/// Checks |ℱφ(ξ e_1)| <= vol(B_R) ‖φ‖_{r,B_R} e^{-(s/r^{1/s})|ξ|^{1/s}} up to a slack factor <= 10.
/// r and s come from φ's declared Gevrey constants.
FourierDecayReport fourier_gevrey_decay_check(const SampledFunction& phi, double R, std::span<const double> xi_grid,
                                              double max_slack = 10.0);

/// u(Ψ) for a test function Ψ on R^{m+n} supported in `box`, by quadrature.
Complex pair(const DistributionData& u, const SampledFunction& Psi, const Box& box, const QuadratureRule& rule = {});

struct ConsistencyReport {
  Complex direct, via_trace;
  double residual = 0.0;
  double lambda_spread = 0.0;  // max over the t nodes of |trace_λ - trace_λ'|
};

/// Compares u(ψ⊗φ) with ∫ trace_t(φ) ψ(t) dt and re-evaluates the trace with a second cutoff.
ConsistencyReport trace_consistency(const DistributionData& u, const SpectralCutoff& cutoff,
                                    const SpectralCutoff& other, const SampledFunction& phi,
                                    const SampledFunction& psi, int t_nodes = 48);

}  // namespace btlab
