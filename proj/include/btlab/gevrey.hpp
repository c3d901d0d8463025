#pragma once

#include "btlab/sampled_function.hpp"

#include <vector>

namespace btlab {

/// max over |α| <= order_cap and a tensor grid on K of |∂^α f| / (h^{|α|} α!^s).
/// A certified lower bound for the Gevrey seminorm ‖f‖_{h,K}.
double gevrey_seminorm(const SampledFunction& f, const GevreyParams& params, const Box& K,
                       int grid_points_per_axis = 17);

/// Radial cutoff: 1 on |x| <= r_inner, 0 on |x| >= r_outer, Gevrey of order s.
/// Transition profile g_a(v)/(g_a(v)+g_a(1-v)) with g_a(u) = exp(-u^{-a}), a = 1/(s-1).
SampledFunction gevrey_bump(double s, double r_inner, double r_outer, int dim);

/// Derivatives F^{(k)}(r), k = 0..K, of the bump's radial profile.
std::vector<double> bump_profile_derivatives(double s, double r_inner, double r_outer, double r, int K);

/// k-th derivatives of g_a(u) = exp(-u^{-a}) for k = 0..K (zero for u <= 0).
std::vector<double> flat_kernel_derivatives(double a, double u, int K);

}  // namespace btlab
