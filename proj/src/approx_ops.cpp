#include "btlab/approx_ops.hpp"

#include "btlab/errors.hpp"
#include "btlab/faa_di_bruno.hpp"
#include "btlab/gevrey.hpp"
#include "btlab/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace btlab {

namespace {

using AmpFn = std::function<void(Point ys, std::span<Complex> out)>;

double gauss_factor(const ApproxConfig& cfg) { return std::pow(cfg.tau / std::numbers::pi, 0.5 * cfg.structure.m()); }

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

Complex bilinear_square(std::span<const Complex> a, std::span<const Complex> b) {
  Complex s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

/// (τ/π)^{m/2} ∫_window e^{-τ⟨z - Z(y,s)⟩²} det Z_x(y,s) amp_c(y,s) dy for c < count.
void slice_average(const ApproxConfig& cfg, std::span<const Complex> z, Point x, Point slice, std::size_t count,
                   const AmpFn& amp, std::span<Complex> out, std::optional<Box> window = {}) {
  std::fill(out.begin(), out.end(), Complex{});
  if (!window) window = gaussian_window(cfg, x);
  if (!window) return;
  const auto& S = cfg.structure;
  const std::size_t m = sz(S.m());
  std::vector<double> ys(sz(S.N()));
  std::copy(slice.begin(), slice.end(), ys.begin() + static_cast<std::ptrdiff_t>(m));
  std::vector<Complex> a(count);
  integrate_rm(
      [&](Point y, std::span<Complex> v) {
        std::copy(y.begin(), y.end(), ys.begin());
        amp(Point(ys), a);
        if (std::all_of(a.begin(), a.end(), [](Complex c) { return c == Complex{}; })) {
          std::fill(v.begin(), v.end(), Complex{});
          return;
        }
        const SlicePoint sp = slice_point(S, Point(ys));
        const Complex K = std::exp(-cfg.tau * bilinear_square(z, sp.Z)) * sp.det;
        for (std::size_t c = 0; c < count; ++c) v[c] = K * a[c];
      },
      count, cfg.rule, *window, out);
  const double g = gauss_factor(cfg);
  for (auto& o : out) o *= g;
}

Complex slice_average1(const ApproxConfig& cfg, std::span<const Complex> z, Point x, Point slice,
                       const std::function<Complex(Point)>& amp) {
  Complex out[1];
  slice_average(cfg, z, x, slice, 1, [&](Point ys, std::span<Complex> v) { v[0] = amp(ys); }, out);
  return out[0];
}

std::vector<double> split_point(Point p, int m, std::vector<double>& t) {
  std::vector<double> x(p.begin(), p.begin() + m);
  t.assign(p.begin() + m, p.end());
  return x;
}

std::vector<int> drop_t_map(int m, int n) {
  std::vector<int> map(sz(m + n), -1);
  for (int l = 0; l < m; ++l) map[sz(l)] = l;
  return map;
}

/// w·t_profile(s)·(-1)^{|ord|} ∂_{x'}^{ord} [e^{-τ⟨z - Z(x',s)⟩²} χ(x') det Z_x(x',s)] at x' = x0.
Complex point_term(const ApproxConfig& cfg, std::span<const Complex> z, Point slice, const PointFunctional& pf) {
  const Complex c = pf.weight * pf.t_profile.value(slice);
  if (c == Complex{}) return 0.0;
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n(), K = pf.order.order();
  std::vector<double> p(pf.location);
  p.insert(p.end(), slice.begin(), slice.end());
  const auto Zj = S.Z_jets(Point(p), K + 1);
  const JetLayout* Lm = JetLayout::get(m, K);
  const auto map = drop_t_map(m, n);
  std::vector<std::vector<Jet>> Zx(sz(m));
  Jet f(Lm, 0.0);
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) Zx[sz(k)].push_back(remap(Zj[sz(k)].partial(l), Lm, map));
    const Jet w = z[sz(k)] - remap(Zj[sz(k)].truncated(K), Lm, map);
    f -= w * w;
  }
  const Jet bracket = exp_phase_jet(cfg.tau, f) * cfg.chi.jet(Point(pf.location), K) * jet_determinant(std::move(Zx));
  const double sign = (K % 2) ? -1.0 : 1.0;
  return c * sign * bracket.derivative(pf.order);
}

Complex distribution_slice(const DistributionData& u, const ApproxConfig& cfg, Point p, bool same_slice) {
  const auto& S = cfg.structure;
  std::vector<double> t;
  const auto x = split_point(p, S.m(), t);
  std::vector<double> slice = same_slice ? t : std::vector<double>(t.size(), 0.0);
  const auto z = S.Z(p);
  Complex total = 0.0;
  if (u.density) {
    const auto& d = *u.density;
    total += slice_average1(cfg, z, Point(x), Point(slice), [&](Point ys) {
      const Complex cv = cfg.chi.value(ys.subspan(0, x.size()));
      return cv == Complex{} ? Complex{} : cv * d.value(ys);
    });
  }
  Complex points = 0.0;
  for (const auto& pf : u.points) points += point_term(cfg, z, Point(slice), pf);
  if (points != Complex{}) total += gauss_factor(cfg) * points;
  return total;
}

Complex smooth_average(const SampledFunction& u, const ApproxConfig& cfg, std::span<const Complex> z, Point slice) {
  std::vector<double> centre;
  for (Complex c : z) centre.push_back(c.real());
  const std::size_t m = z.size();
  return slice_average1(cfg, z, Point(centre), slice, [&](Point ys) {
    const Complex cv = cfg.chi.value(ys.subspan(0, m));
    return cv == Complex{} ? Complex{} : cv * u.value(ys);
  });
}

Complex smooth_slice(const SampledFunction& u, const ApproxConfig& cfg, Point p, bool same_slice) {
  const auto& S = cfg.structure;
  std::vector<double> t;
  split_point(p, S.m(), t);
  if (!same_slice) std::fill(t.begin(), t.end(), 0.0);
  return smooth_average(u, cfg, S.Z(p), Point(t));
}

/// Boxes covering R/2 <= |y| <= R: two intervals when m = 1, the full cube otherwise.
std::vector<Box> annulus_boxes(int m, double R) {
  if (m == 1) return {Box{{-R}, {-R / 2}}, Box{{R / 2}, {R}}};
  return {Box::cube(sz(m), R)};
}

/// (L_jχ)(y,s) for every j, zero where ∇χ vanishes.
void L_chi(const ApproxConfig& cfg, Point ys, std::span<Complex> out) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n();
  const Jet cj = cfg.chi.jet(ys.subspan(0, sz(m)), 1);
  bool flat = true;
  for (int l = 0; l < m; ++l) flat = flat && cj.coeff(sz(1 + l)) == Complex{};
  std::fill(out.begin(), out.end(), Complex{});
  if (flat) return;
  const auto F = dual_frame(S, ys);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < m; ++l) {
      Complex coef = 0.0;
      for (int k = 0; k < m; ++k) coef -= F.Zx_inv(l, k) * F.Zt(k, j);
      out[sz(j)] += coef * cj.coeff(sz(1 + l));
    }
}

Complex stokes(const ApproxConfig& cfg, Point p, const std::function<Complex(Point)>& u_at) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n();
  std::vector<double> t;
  const auto x = split_point(p, m, t);
  if (std::all_of(t.begin(), t.end(), [](double v) { return v == 0.0; })) return 0.0;
  const auto z = S.Z(p);
  const auto boxes = annulus_boxes(m, cfg.radii.R);
  std::vector<double> slice(sz(n));
  auto along = [&](double r) {
    for (int j = 0; j < n; ++j) slice[sz(j)] = r * t[sz(j)];
    std::vector<Complex> acc(sz(n), 0.0), part(sz(n));
    for (const auto& b : boxes) {
      slice_average(
          cfg, z, Point(x), Point(slice), sz(n),
          [&](Point ys, std::span<Complex> v) {
            L_chi(cfg, ys, v);
            if (std::all_of(v.begin(), v.end(), [](Complex c) { return c == Complex{}; })) return;
            const Complex uv = u_at(ys);
            for (auto& c : v) c *= uv;
          },
          part, b);
      for (int j = 0; j < n; ++j) acc[sz(j)] += part[sz(j)];
    }
    return acc;
  };
  return integrate_path(along, t, cfg.rule);
}

/// Jet of a function of y ∈ R^m re-expressed in the N variables of (y, t).
Jet lift_x_jet(const Jet& a, int m, int n) {
  std::vector<int> map(sz(m));
  for (int l = 0; l < m; ++l) map[sz(l)] = l;
  return remap(a, JetLayout::get(m + n, a.order()), map);
}

std::vector<Word> words_up_to(int m, int n, int cap) {
  std::vector<Word> out;
  for (const auto& a : indices_up_to(sz(m + n), cap)) {
    Word w;
    for (int i = 0; i < m + n; ++i)
      for (int r = 0; r < a[sz(i)]; ++r) w.push_back(i < m ? VectorField{VectorField::M, i} : VectorField{VectorField::L, i - m});
    out.push_back(std::move(w));
  }
  return out;
}

/// X^α(χu) at a point of R^{m+n}, one value per word.
void X_alpha_chi_u(const ApproxConfig& cfg, const SampledFunction& u, const std::vector<Word>& words, int cap, Point ys,
                   std::span<Complex> out) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n();
  const Jet cj = cfg.chi.jet(ys.subspan(0, sz(m)), cap);
  bool zero = true;
  for (std::size_t i = 0; i < cj.size(); ++i) zero = zero && cj.coeff(i) == Complex{};
  if (zero) {
    std::fill(out.begin(), out.end(), Complex{});
    return;
  }
  const Jet prod = lift_x_jet(cj, m, n) * u.jet(ys, cap);
  if (cap == 0) {
    out[0] = prod.value();
    return;
  }
  const FrameJets F = frame_jets(S, ys, cap - 1);
  for (std::size_t i = 0; i < words.size(); ++i)
    out[i] = words[i].empty() ? prod.value() : apply_word(F, words[i], prod, m).value();
}

/// Physicists' Hermite polynomial at a complex argument.
Complex hermite(int k, Complex x) {
  Complex h0 = 1.0, h1 = 2.0 * x;
  if (k == 0) return h0;
  for (int i = 1; i < k; ++i) {
    const Complex h2 = 2.0 * x * h1 - 2.0 * i * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Σ_{k > K} q^k / k!.
double exp_remainder(double q, int K) {
  double term = 1.0;
  for (int k = 1; k <= K + 1; ++k) term *= q / k;
  double sum = 0.0;
  for (int k = K + 1; k < K + 2000; ++k) {
    sum += term;
    term *= q / (k + 1);
    if (term <= 1e-17 * sum) break;
  }
  return sum;
}

double sup_phase_modulus(const ApproxConfig& cfg, const std::vector<std::vector<double>>& ys) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n();
  const double R = cfg.radii.R;
  std::vector<std::vector<Complex>> w;
  std::vector<double> q(sz(m + n), 0.0);
  for (const auto& y : ys) {
    std::copy(y.begin(), y.end(), q.begin());
    w.push_back(S.Z(Point(q)));
  }
  double Q = 0.0;
  for (const auto& x : ball_grid(sz(m), R, 9))
    for (const auto& t : ball_grid(sz(n), R, 9)) {
      std::vector<double> p(x);
      p.insert(p.end(), t.begin(), t.end());
      const auto z = S.Z(Point(p));
      for (const auto& wy : w) Q = std::max(Q, std::abs(bilinear_square(z, wy)));
    }
  return Q;
}

/// Σ_{k<=K} (-τ)^k/k! ⟨z - w⟩^{2k} as a jet; `z` and `w` are jets in a common layout.
Jet truncated_kernel(double tau, const std::vector<Jet>& z, const std::vector<Jet>& w, int K) {
  Jet q(z[0].layout(), 0.0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const Jet d = z[k] - w[k];
    q += d * d;
  }
  Jet term(z[0].layout(), 1.0), sum(z[0].layout(), 1.0);
  for (int k = 1; k <= K; ++k) {
    term = term * q * (-tau / k);
    sum += term;
  }
  return sum;
}

PolynomialApproximant approximant_impl(const std::function<Complex(Point)>* smooth_amp, const DistributionData* dist,
                                       const ApproxConfig& cfg, int D) {
  cfg.validate();
  if (D < 0) throw ParameterError("polynomial_approximant needs degree >= 0");
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n();
  const int K = D / 2;
  const JetLayout* Lz = JetLayout::get(m, D);
  PolynomialApproximant P;
  P.m = m;
  P.degree = D;
  P.coeffs.assign(Lz->size(), 0.0);
  const double g = gauss_factor(cfg);

  auto y_samples = [&] {
    std::vector<std::vector<double>> ys = ball_grid(sz(m), cfg.radii.R, 17);
    if (dist)
      for (const auto& pf : dist->points) ys.push_back(pf.location);
    return ys;
  };
  const double Q = sup_phase_modulus(cfg, y_samples());
  const double rK = exp_remainder(cfg.tau * Q, K);

  std::vector<Jet> zvars;
  for (int k = 0; k < m; ++k) zvars.push_back(Jet::variable(Lz, k, 0.0));

  std::function<Complex(Point)> amp;
  if (smooth_amp)
    amp = *smooth_amp;
  else if (dist && dist->density)
    amp = [&](Point ys) { return dist->density->value(ys); };

  if (amp) {
    // Components: one per coefficient, plus ∫|χ u det| for the tail.
    const std::size_t C = Lz->size();
    std::vector<Complex> out(C + 1);
    std::vector<double> ys(sz(m + n), 0.0);
    integrate_rm(
        [&](Point y, std::span<Complex> v) {
          std::copy(y.begin(), y.end(), ys.begin());
          const Complex cv = cfg.chi.value(y);
          if (cv == Complex{}) {
            std::fill(v.begin(), v.end(), Complex{});
            return;
          }
          const SlicePoint sp = slice_point(S, Point(ys));
          const Complex a = cv * amp(Point(ys)) * sp.det;
          std::vector<Jet> w;
          for (Complex wk : sp.Z) w.emplace_back(Lz, wk);
          const Jet ker = truncated_kernel(cfg.tau, zvars, w, K);
          for (std::size_t i = 0; i < C; ++i) v[i] = a * ker.coeff(i);
          v[C] = std::abs(a);
        },
        C + 1, cfg.rule, Box::cube(sz(m), cfg.radii.R), out);
    for (std::size_t i = 0; i < C; ++i) P.coeffs[i] += g * out[i];
    P.tail_bound += g * out[C].real() * rK;
  }

  if (dist) {
    for (const auto& pf : dist->points) {
      const std::vector<double> zero_t(sz(n), 0.0);
      const Complex c = pf.weight * pf.t_profile.value(Point(zero_t));
      if (c == Complex{}) continue;
      const int Ko = pf.order.order();
      const int order = D + Ko;
      const JetLayout* L2 = JetLayout::get(2 * m, order);
      std::vector<double> p(pf.location);
      p.insert(p.end(), zero_t.begin(), zero_t.end());
      std::vector<int> map(sz(m + n), -1);
      for (int l = 0; l < m; ++l) map[sz(l)] = m + l;
      const auto Zj = S.Z_jets(Point(p), order + 1);
      std::vector<Jet> zj, wj;
      std::vector<std::vector<Jet>> Zx(sz(m));
      for (int k = 0; k < m; ++k) {
        zj.push_back(Jet::variable(L2, k, 0.0));
        wj.push_back(remap(Zj[sz(k)].truncated(order), L2, map));
        for (int l = 0; l < m; ++l) Zx[sz(k)].push_back(remap(Zj[sz(k)].partial(l), L2, map));
      }
      std::vector<int> chi_map(sz(m));
      for (int l = 0; l < m; ++l) chi_map[sz(l)] = m + l;
      const Jet chi = remap(cfg.chi.jet(Point(pf.location), order), L2, chi_map);
      const Jet det = jet_determinant(std::move(Zx));
      const Jet prod = truncated_kernel(cfg.tau, zj, wj, K) * chi * det;
      const double sign = (Ko % 2) ? -1.0 : 1.0;
      for (std::size_t i = 0; i < Lz->size(); ++i) {
        const MultiIndex& gamma = Lz->index(i);
        std::vector<int> full(sz(2 * m));
        for (int k = 0; k < m; ++k) {
          full[sz(k)] = gamma[sz(k)];
          full[sz(m + k)] = pf.order[sz(k)];
        }
        P.coeffs[i] += g * c * sign * factorial(pf.order) * prod.taylor(MultiIndex(full));
      }
      if (Ko > 0)
        P.tail_bound = std::numeric_limits<double>::infinity();
      else
        P.tail_bound += g * std::abs(c * chi.value() * det.value()) * rK;
    }
  }
  return P;
}

}  // namespace

std::optional<Box> gaussian_window(const ApproxConfig& cfg, Point x) {
  const std::size_t m = sz(cfg.structure.m());
  const double c = cfg.rule.truncation_radius_multiplier * std::sqrt(2.0 / cfg.tau);
  const double R = cfg.radii.R;
  Box w{std::vector<double>(m), std::vector<double>(m)};
  for (std::size_t i = 0; i < m; ++i) {
    w.lo[i] = std::max(-R, x[i] - c);
    w.hi[i] = std::min(R, x[i] + c);
    if (!(w.hi[i] > w.lo[i])) return std::nullopt;
  }
  return w;
}

void ApproxConfig::validate() const {
  if (!(tau > 0)) throw ParameterError("tau must be positive");
  rule.validate();
  radii.validate();
  const int m = structure.m();
  if (m < 1) throw ParameterError("config has no structure");
  if (!chi.valid() || chi.dim() != sz(m)) throw ParameterError("χ must be a function on R^m");
  for (const auto& y : ball_grid(sz(m), radii.R / 2, 9))
    if (std::abs(chi.value(Point(y)) - 1.0) > 1e-12) throw ParameterError("χ must equal 1 on B_{R/2}");
  for (const auto& y : box_grid(Box::cube(sz(m), 1.25 * radii.R), 11)) {
    double q = 0.0;
    for (double v : y) q += v * v;
    if (q >= radii.R * radii.R && std::abs(chi.value(Point(y))) > 1e-12)
      throw ParameterError("χ must vanish outside B_R");
  }
  if (m == 1) {
    const double edge[2] = {radii.R, -radii.R};
    if (std::abs(chi.value(Point(edge, 1))) > 1e-12 || std::abs(chi.value(Point(edge + 1, 1))) > 1e-12)
      throw ParameterError("χ must vanish outside B_R");
  }
}

ApproxConfig ApproxConfig::with_tau(double t) const {
  ApproxConfig c = *this;
  c.tau = t;
  return c;
}

ApproxConfig make_config(StructureMap S, DomainRadii radii, double tau, double s, std::optional<double> plateau,
                         std::optional<double> support) {
  ApproxConfig cfg;
  cfg.tau = tau;
  cfg.chi = gevrey_bump(s, plateau.value_or(radii.R / 2), support.value_or(radii.R), S.m());
  cfg.structure = std::move(S);
  cfg.radii = radii;
  cfg.validate();
  return cfg;
}

Complex E_tau(const SampledFunction& u, const ApproxConfig& cfg, Point p) { return smooth_slice(u, cfg, p, false); }
Complex G_tau(const SampledFunction& u, const ApproxConfig& cfg, Point p) { return smooth_slice(u, cfg, p, true); }
Complex E_tau(const DistributionData& u, const ApproxConfig& cfg, Point p) {
  return distribution_slice(u, cfg, p, false);
}
Complex G_tau(const DistributionData& u, const ApproxConfig& cfg, Point p) {
  return distribution_slice(u, cfg, p, true);
}
Complex G_tau_free(const SampledFunction& g, const ApproxConfig& cfg, std::span<const Complex> z, Point s) {
  if (z.size() != static_cast<std::size_t>(cfg.structure.m()) || s.size() != static_cast<std::size_t>(cfg.structure.n()))
    throw ParameterError("G_tau_free: argument dimensions do not match the structure");
  return smooth_average(g, cfg, z, s);
}

Complex R_tau_direct(const SampledFunction& u, const ApproxConfig& cfg, Point p) {
  return G_tau(u, cfg, p) - E_tau(u, cfg, p);
}
Complex R_tau_direct(const DistributionData& u, const ApproxConfig& cfg, Point p) {
  return G_tau(u, cfg, p) - E_tau(u, cfg, p);
}

Complex R_tau_stokes(const SampledFunction& u, const ApproxConfig& cfg, Point p) {
  return stokes(cfg, p, [&](Point ys) { return u.value(ys); });
}

Complex R_tau_stokes(const DistributionData& u, const ApproxConfig& cfg, Point p) {
  // Point functionals sit in B_{R/2}, where L_jχ vanishes identically.
  for (const auto& pf : u.points) {
    double q = 0.0;
    for (double v : pf.location) q += v * v;
    if (q > cfg.radii.R * cfg.radii.R / 4) throw PreconditionError("point functional outside B_{R/2}");
  }
  if (!u.density) return 0.0;
  return stokes(cfg, p, [&](Point ys) { return u.density->value(ys); });
}

double solution_residual(const StructureMap& S, const SampledFunction& u, double R, int per_axis) {
  double worst = 0.0;
  for (const auto& x : ball_grid(sz(S.m()), R, per_axis))
    for (const auto& t : ball_grid(sz(S.n()), R, per_axis)) {
      std::vector<double> p(x);
      p.insert(p.end(), t.begin(), t.end());
      for (int j = 0; j < S.n(); ++j)
        worst = std::max(worst, std::abs(apply_vector_fields(S, u, Word{{VectorField::L, j}}, Point(p))));
    }
  return worst;
}

CommutatorResult commutator_check(const SampledFunction& u, const ApproxConfig& cfg, VectorField X, Point p) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n(), N = S.N();
  std::vector<double> t;
  const auto x = split_point(p, m, t);
  const auto window = gaussian_window(cfg, Point(x));
  CommutatorResult res;
  if (!window) return res;
  const JetLayout* L1 = JetLayout::get(N, 1);
  const auto Zxt = S.Z_jets(p, 1);
  const FrameJets Fp = frame_jets(S, p, 0);
  std::vector<int> keep_t(sz(N), -1);
  for (int j = 0; j < n; ++j) keep_t[sz(m + j)] = m + j;
  std::vector<double> ys(sz(N));
  std::copy(t.begin(), t.end(), ys.begin() + m);

  // LHS: X applied in (x, t) to the integrand, the kernel differentiated through its phase.
  auto lhs_integrand = [&](Point y, std::span<Complex> v) {
    std::copy(y.begin(), y.end(), ys.begin());
    const Complex cv = cfg.chi.value(y);
    if (cv == Complex{}) {
      v[0] = 0.0;
      return;
    }
    const auto Zy = S.Z_jets(Point(ys), 1);
    Jet f(L1, 0.0);
    for (int k = 0; k < m; ++k) {
      const Jet d = Zxt[sz(k)] - remap(Zy[sz(k)], L1, keep_t);
      f -= d * d;
    }
    const Jet data = remap(u.jet(Point(ys), 1), L1, keep_t) * remap(detZx_jet(S, Point(ys), 1), L1, keep_t) * cv;
    v[0] = apply_field(Fp, X, exp_phase_jet(cfg.tau, f) * data, m).value();
  };
  Complex lhs[1];
  integrate_rm(lhs_integrand, 1, cfg.rule, *window, lhs);
  res.lhs = gauss_factor(cfg) * lhs[0];

  // RHS: G with amplitude (Xu)χ + (Xχ)u, both from the data's own derivatives.
  const auto z = S.Z(p);
  res.rhs = slice_average1(cfg, z, Point(x), Point(t), [&](Point q) {
    const Jet cj = cfg.chi.jet(q.subspan(0, sz(m)), 1);
    bool zero = true;
    for (std::size_t i = 0; i < cj.size(); ++i) zero = zero && cj.coeff(i) == Complex{};
    if (zero) return Complex{};
    const FrameJets F = frame_jets(S, q, 0);
    const Jet uj = u.jet(q, 1);
    const Jet cl = lift_x_jet(cj, m, n);
    return apply_field(F, X, uj, m).value() * cj.value() + apply_field(F, X, cl, m).value() * uj.value();
  });
  res.residual = std::abs(res.lhs - res.rhs);
  return res;
}

std::vector<Complex> X_alpha_G(const SampledFunction& u, const ApproxConfig& cfg, int cap, Point p) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n();
  const auto words = words_up_to(m, n, cap);
  std::vector<double> t;
  const auto x = split_point(p, m, t);
  std::vector<Complex> out(words.size());
  slice_average(
      cfg, S.Z(p), Point(x), Point(t), words.size(),
      [&](Point ys, std::span<Complex> v) { X_alpha_chi_u(cfg, u, words, cap, ys, v); }, out);
  return out;
}

std::vector<Complex> X_alpha_E(const SampledFunction& u, const ApproxConfig& cfg, int cap, Point p) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n();
  const auto alphas = indices_up_to(sz(m + n), cap);
  std::vector<double> t;
  const auto x = split_point(p, m, t);
  const std::vector<double> zero_t(t.size(), 0.0);
  const auto z = S.Z(p);
  const double st = std::sqrt(cfg.tau);
  std::vector<Complex> out(alphas.size());
  // M^a E = (∂_z^a F)(Z) with F the entire function E is built from; any L factor gives 0.
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    bool has_L = false;
    for (int j = 0; j < n; ++j) has_L = has_L || alphas[i][sz(m + j)] > 0;
    if (!has_L) live.push_back(i);
  }
  std::vector<Complex> vals(live.size());
  std::vector<double> ys(sz(m + n), 0.0);
  auto window = gaussian_window(cfg, Point(x));
  if (window)
    integrate_rm(
        [&](Point y, std::span<Complex> v) {
          std::copy(y.begin(), y.end(), ys.begin());
          const Complex cv = cfg.chi.value(y);
          if (cv == Complex{}) {
            std::fill(v.begin(), v.end(), Complex{});
            return;
          }
          const SlicePoint sp = slice_point(S, Point(ys));
          const Complex base = std::exp(-cfg.tau * bilinear_square(z, sp.Z)) * sp.det * cv * u.value(Point(ys));
          for (std::size_t i = 0; i < live.size(); ++i) {
            Complex h = 1.0;
            for (int k = 0; k < m; ++k) {
              const int a = alphas[live[i]][sz(k)];
              if (a) h *= std::pow(-st, a) * hermite(a, st * (z[sz(k)] - sp.Z[sz(k)]));
            }
            v[i] = base * h;
          }
        },
        live.size(), cfg.rule, *window, vals);
  for (std::size_t i = 0; i < live.size(); ++i) out[live[i]] = gauss_factor(cfg) * vals[i];
  return out;
}

Complex PolynomialApproximant::coefficient(const MultiIndex& gamma) const {
  if (gamma.order() > degree) return 0.0;
  return coeffs[JetLayout::get(m, degree)->position(gamma)];
}

Complex PolynomialApproximant::operator()(std::span<const Complex> z) const {
  const JetLayout* L = JetLayout::get(m, degree);
  Complex s = 0.0;
  for (std::size_t i = 0; i < L->size(); ++i) {
    Complex mono = 1.0;
    const MultiIndex& g = L->index(i);
    for (int k = 0; k < m; ++k) mono *= std::pow(z[sz(k)], g[sz(k)]);
    s += coeffs[i] * mono;
  }
  return s;
}

PolynomialApproximant polynomial_approximant(const SampledFunction& u, const ApproxConfig& cfg, int degree) {
  const std::function<Complex(Point)> amp = [&](Point ys) { return u.value(ys); };
  return approximant_impl(&amp, nullptr, cfg, degree);
}

PolynomialApproximant polynomial_approximant(const DistributionData& u, const ApproxConfig& cfg, int degree) {
  return approximant_impl(nullptr, &u, cfg, degree);
}

double vanishing_trace_check(const DistributionData& u, const ApproxConfig& cfg, int per_axis) {
  const std::vector<double> zero_t(sz(cfg.structure.n()), 0.0);
  if (u.density) throw PreconditionError("vanishing_trace_check needs a zero density");
  for (const auto& pf : u.points)
    if (pf.t_profile.value(Point(zero_t)) != Complex{})
      throw PreconditionError("vanishing_trace_check needs every t_profile to vanish at t = 0");
  double worst = 0.0;
  for (const auto& p : U_grid(cfg.structure, cfg.radii, per_axis))
    worst = std::max(worst, std::abs(E_tau(u, cfg, Point(p))));
  return worst;
}

std::string to_string(SweepMode m) {
  switch (m) {
    case SweepMode::G_to_chi_u: return "G";
    case SweepMode::R_decay: return "R";
    case SweepMode::E_to_u: return "E";
  }
  return "?";
}

GBoundConstants g_bound_constants(const SampledFunction& u, const ApproxConfig& cfg, int per_axis) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n(), N = S.N();
  const double R = cfg.radii.R;
  double grad_v = 0.0, sup_v = 0.0, H = 0.0, Zmax = 0.0;
  for (const auto& x : ball_grid(sz(m), R, per_axis))
    for (const auto& t : ball_grid(sz(n), R, per_axis)) {
      std::vector<double> p(x);
      p.insert(p.end(), t.begin(), t.end());
      const Jet v = lift_x_jet(cfg.chi.jet(Point(x), 1), m, n) * u.jet(Point(p), 1) * detZx_jet(S, Point(p), 1);
      double g2 = 0.0;
      for (int l = 0; l < m; ++l) g2 += std::norm(v.coeff(sz(1 + l)));
      grad_v = std::max(grad_v, std::sqrt(g2));
      sup_v = std::max(sup_v, std::abs(v.value()));
      double h2 = 0.0, z2 = 0.0;
      for (int k = 0; k < m; ++k) {
        const Jet ph = S.phi(k).jet(Point(p), 2);
        for (int l = 0; l < m; ++l) {
          const double d = std::abs(ph.coeff(sz(1 + l)));
          z2 += (k == l ? 1.0 : 0.0) + d * d;
          for (int l2 = 0; l2 < m; ++l2) {
            MultiIndex a(sz(N));
            a[sz(l)] += 1;
            a[sz(l2)] += 1;
            h2 += std::norm(ph.derivative(a));
          }
        }
      }
      H = std::max(H, std::sqrt(h2));
      Zmax = std::max(Zmax, std::sqrt(z2));
    }
  // ∫_{R^m} |y|^k e^{-a|y|²} dy with a = 1 - m/4 from the Lipschitz bound.
  const double a = 1.0 - m / 4.0;
  auto moment = [&](int k) {
    const double sphere = 2.0 * std::pow(std::numbers::pi, m / 2.0) / std::tgamma(m / 2.0);
    return sphere * std::tgamma((m + k) / 2.0) / (2.0 * std::pow(a, (m + k) / 2.0));
  };
  const double pi_m = std::pow(std::numbers::pi, -m / 2.0);
  GBoundConstants c;
  c.C_I = pi_m * grad_v * moment(1);
  c.C_J = pi_m * sup_v * H * Zmax * moment(3);
  return c;
}

double least_squares_slope(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceReport convergence_sweep(const SampledFunction& u, const ApproxConfig& cfg, std::span<const double> taus,
                                    SweepMode mode, const SweepOptions& opt) {
  cfg.validate();
  if (taus.size() < 4) throw ParameterError("convergence_sweep needs at least 4 values of tau");
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1])) throw ParameterError("tau grid must be strictly increasing");
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n(), cap = opt.gevrey_order_cap;
  const auto alphas = indices_up_to(sz(m + n), cap);
  const auto words = words_up_to(m, n, cap);
  double h = 1.0, s = 2.0;
  if (cfg.chi.declared_gevrey()) {
    h = cfg.chi.declared_gevrey()->h;
    s = cfg.chi.declared_gevrey()->s;
  }
  if (u.declared_gevrey()) h = std::max(h, u.declared_gevrey()->h);
  if (opt.h) h = *opt.h;

  ConvergenceReport rep;
  rep.mode = mode;
  const auto grid = U_grid(S, cfg.radii, opt.grid_per_axis);
  rep.grid_points = grid.size();
  std::vector<double> r_sup;
  for (double tau : taus) {
    const ApproxConfig c = cfg.with_tau(tau);
    std::vector<std::array<double, 3>> per(grid.size());
    parallel_for(grid.size(), [&](std::size_t gi) {
      const auto& p = grid[gi];
      double sup = 0.0, gev = 0.0, rs = 0.0;
      std::vector<Complex> target(alphas.size(), 0.0), E;
      // G is needed in every mode: directly, or for the R part of the E bound.
      const std::vector<Complex> G = X_alpha_G(u, c, cap, Point(p));
      if (mode != SweepMode::G_to_chi_u) E = X_alpha_E(u, c, cap, Point(p));
      if (mode == SweepMode::G_to_chi_u) {
        X_alpha_chi_u(c, u, words, cap, Point(p), target);
      } else if (mode == SweepMode::E_to_u) {
        const Jet uj = u.jet(Point(p), cap);
        const FrameJets F = frame_jets(S, Point(p), std::max(cap - 1, 0));
        for (std::size_t i = 0; i < words.size(); ++i)
          target[i] = words[i].empty() ? uj.value() : apply_word(F, words[i], uj, m).value();
      }
      for (std::size_t i = 0; i < alphas.size(); ++i) {
        Complex op = mode == SweepMode::G_to_chi_u ? G[i] : mode == SweepMode::E_to_u ? E[i] : G[i] - E[i];
        const double err = std::abs(op - target[i]);
        if (i == 0) sup = std::max(sup, err);
        const int k = alphas[i].order();
        gev = std::max(gev, err / (std::pow(2 * h, k) * std::pow(factorial(k), s)));
      }
      if (mode != SweepMode::G_to_chi_u) rs = std::abs(G[0] - E[0]);
      per[gi] = {sup, gev, rs};
    });
    double sup = 0.0, gev = 0.0, rs = 0.0;
    for (const auto& v : per) {
      sup = std::max(sup, v[0]);
      gev = std::max(gev, v[1]);
      rs = std::max(rs, v[2]);
    }
    rep.tau_grid.push_back(tau);
    rep.sup_errors.push_back(sup);
    rep.gevrey_errors.push_back(gev);
    r_sup.push_back(rs);
  }

  // Bound shapes.
  const double R = cfg.radii.R;
  auto r_shape = [&](double tau) {
    return std::pow(tau, m / 2.0) * std::exp(s * std::pow(tau, 1.0 / s) - tau * R * R / 33.0);
  };
  double CG = 0.0, CR = 0.0;
  if (mode != SweepMode::R_decay) CG = g_bound_constants(u, cfg).total();
  if (mode != SweepMode::G_to_chi_u) CR = r_sup[0] / r_shape(taus[0]);
  rep.bound_dominates = true;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    double b = 0.0;
    if (mode == SweepMode::G_to_chi_u) b = CG / std::sqrt(taus[i]);
    if (mode == SweepMode::R_decay) b = CR * r_shape(taus[i]);
    if (mode == SweepMode::E_to_u) b = CG / std::sqrt(taus[i]) + CR * r_shape(taus[i]);
    rep.bound_values.push_back(b);
    if (rep.sup_errors[i] > b * (1 + 1e-12)) rep.bound_dominates = false;
  }

  rep.strictly_decreasing = true;
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (!(rep.sup_errors[i] < rep.sup_errors[i - 1])) rep.strictly_decreasing = false;
  if (mode == SweepMode::R_decay && !rep.strictly_decreasing) rep.flags.push_back("non-monotone R error sequence");

  std::vector<double> lt, le, tt, te;
  bool any_zero = false;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (rep.sup_errors[i] <= 0) {
      any_zero = true;
      continue;
    }
    lt.push_back(std::log(taus[i]));
    le.push_back(std::log(rep.sup_errors[i]));
    if (i >= taus.size() / 2) {
      tt.push_back(taus[i]);
      te.push_back(std::log(rep.sup_errors[i]));
    }
  }
  if (any_zero) rep.flags.push_back("zero error entries excluded from fits");
  rep.fitted_slope = lt.size() >= 2 ? least_squares_slope(lt, le) : std::numeric_limits<double>::quiet_NaN();
  rep.fitted_exp_rate = tt.size() >= 2 ? least_squares_slope(tt, te) : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

}  // namespace btlab
