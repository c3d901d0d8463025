#include "btlab/trace.hpp"

#include "btlab/errors.hpp"
#include "btlab/gevrey.hpp"
#include "btlab/parallel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

namespace btlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

std::size_t padded_size(const SpectralCutoff& c) { return static_cast<std::size_t>(c.grid) * c.padding; }

// FFTW planning is not thread-safe; execution is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

void fft_inplace(std::vector<Complex>& a, std::size_t per_axis, int rank, int sign) {
  std::vector<int> dims(static_cast<std::size_t>(rank), static_cast<int>(per_axis));
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan;
  {
    std::lock_guard lk(plan_mutex());
    plan = fftw_plan_dft(rank, dims.data(), p, p, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw NumericError("fft: planning failed");
  fftw_execute(plan);
  std::lock_guard lk(plan_mutex());
  fftw_destroy_plan(plan);
}

std::vector<double> frequency_axis(const SpectralCutoff& c) {
  const std::size_t Mp = padded_size(c);
  const double step = kTwoPi / (static_cast<double>(Mp) * c.spacing());
  std::vector<double> f(Mp);
  for (std::size_t a = 0; a < Mp; ++a) f[a] = (static_cast<double>(a) - static_cast<double>(Mp / 2)) * step;
  return f;
}

/// Row-major product of per-axis factors.
std::vector<Complex> outer_product(const std::vector<std::vector<Complex>>& axes) {
  std::vector<Complex> out{1.0};
  for (const auto& ax : axes) {
    std::vector<Complex> next;
    next.reserve(out.size() * ax.size());
    for (Complex v : out)
      for (Complex w : ax) next.push_back(v * w);
    out = std::move(next);
  }
  return out;
}

/// Flags flat indices whose frequency lies in the outer 10% of some axis.
std::vector<char> band_flags(std::size_t per_axis, int rank) {
  const double half = static_cast<double>(per_axis / 2);
  std::vector<char> axis(per_axis);
  for (std::size_t a = 0; a < per_axis; ++a) axis[a] = std::abs(static_cast<double>(a) - half) >= 0.9 * half;
  std::vector<char> flags(ipow(per_axis, rank), 0);
  for (std::size_t flat = 0; flat < flags.size(); ++flat) {
    std::size_t rem = flat;
    for (int ax = 0; ax < rank && !flags[flat]; ++ax) {
      flags[flat] = axis[rem % per_axis];
      rem /= per_axis;
    }
  }
  return flags;
}

/// ∫ f(y) e^{sign·i⟨y,ξ⟩} dy over `rank` axes of the cutoff cube, by FFT of the zero-padded samples.
/// The result is row-major in ascending frequency.
std::vector<Complex> transform(const std::function<Complex(Point)>& f, const SpectralCutoff& c, int rank, int sign) {
  const std::size_t M = static_cast<std::size_t>(c.grid), Mp = padded_size(c);
  const double h = c.spacing(), L = c.half_width;
  std::vector<Complex> buf(ipow(Mp, rank), 0.0);

  const std::size_t inner = ipow(M, rank - 1);
  parallel_for(M, [&](std::size_t j0) {
    std::vector<double> y(static_cast<std::size_t>(rank));
    std::vector<std::size_t> j(static_cast<std::size_t>(rank), 0);
    j[0] = j0;
    for (std::size_t s = 0; s < inner; ++s) {
      std::size_t rem = s;
      for (int ax = rank - 1; ax >= 1; --ax) {
        j[static_cast<std::size_t>(ax)] = rem % M;
        rem /= M;
      }
      std::size_t flat = 0;
      for (int ax = 0; ax < rank; ++ax) {
        const auto a = static_cast<std::size_t>(ax);
        y[a] = -L + static_cast<double>(j[a]) * h;
        flat = flat * Mp + j[a];
      }
      buf[flat] = f(y);
    }
  });

  fft_inplace(buf, Mp, rank, sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD);

  // Axis factor: reorder to ascending frequency and undo the grid offset -L.
  const auto freq = frequency_axis(c);
  std::vector<std::size_t> src(Mp);
  std::vector<Complex> phase(Mp);
  for (std::size_t a = 0; a < Mp; ++a) {
    src[a] = (a + Mp / 2) % Mp;
    phase[a] = std::exp(-static_cast<double>(sign) * kI * L * freq[a]) * h;
  }
  std::vector<Complex> out(buf.size());
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t rem = flat, sflat = 0, mult = 1;
    Complex ph = 1.0;
    for (int ax = rank - 1; ax >= 0; --ax) {
      const std::size_t ai = rem % Mp;
      rem /= Mp;
      sflat += src[ai] * mult;
      mult *= Mp;
      ph *= phase[ai];
    }
    out[flat] = buf[sflat] * ph;
  }
  return out;
}

void check_band(std::span<const Complex> v, const std::vector<char>& band, double tol, const char* what) {
  double all = 0.0, outer = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    all = std::max(all, a);
    if (band[i]) outer = std::max(outer, a);
  }
  if (all > 0.0 && outer > tol * all) {
    std::ostringstream os;
    os << "fourier_of: " << what << " transform has not decayed at the grid edge (edge/peak = " << outer / all
       << ", tolerance " << tol << "); refine the grid";
    throw ResolutionError(os.str());
  }
}

double ball_volume(int m, double R) {
  return std::pow(std::numbers::pi, 0.5 * m) * std::pow(R, m) / std::tgamma(0.5 * m + 1.0);
}

}  // namespace

void SpectralCutoff::validate() const {
  if (m < 1 || n < 1) throw ParameterError("SpectralCutoff: need m, n >= 1");
  if (grid < 16 || padding < 1) throw ParameterError("SpectralCutoff: need grid >= 16 and padding >= 1");
  if (grid % 2 != 0) throw ParameterError("SpectralCutoff: grid must be even");
  if (!(R > 0.0) || !(half_width > R)) throw ParameterError("SpectralCutoff: need 0 < R < half_width");
  if (!lambda.valid() || lambda.dim() != dim()) throw ParameterError("SpectralCutoff: lambda has the wrong dimension");
  std::vector<double> y(dim());
  for (const auto& x : ball_grid(static_cast<std::size_t>(m), R, 7))
    for (const auto& t : ball_grid(static_cast<std::size_t>(n), R, 7)) {
      std::copy(x.begin(), x.end(), y.begin());
      std::copy(t.begin(), t.end(), y.begin() + m);
      if (std::abs(lambda.value(y) - 1.0) > 1e-12) throw ParameterError("SpectralCutoff: lambda is not 1 on V");
    }
  for (const auto& p : box_grid(Box::cube(dim(), half_width), 9)) {
    bool boundary = false;
    for (double v : p) boundary = boundary || std::abs(std::abs(v) - half_width) < 1e-12;
    if (boundary && std::abs(lambda.value(p)) > 1e-14)
      throw ParameterError("SpectralCutoff: lambda does not vanish on the sampling boundary");
  }
}

SampledFunction tensor_product(const SampledFunction& a, const SampledFunction& b) {
  const std::size_t da = a.dim(), db = b.dim(), d = da + db;
  Box box;
  box.lo = a.domain().lo;
  box.hi = a.domain().hi;
  box.lo.insert(box.lo.end(), b.domain().lo.begin(), b.domain().lo.end());
  box.hi.insert(box.hi.end(), b.domain().hi.begin(), b.domain().hi.end());
  auto value = [=](Point p) { return a.value(p.subspan(0, da)) * b.value(p.subspan(da)); };
  auto jet = [=](Point p, int order) {
    const JetLayout* L = JetLayout::get(static_cast<int>(d), order);
    std::vector<int> ma(da), mb(db);
    for (std::size_t i = 0; i < da; ++i) ma[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < db; ++i) mb[i] = static_cast<int>(da + i);
    return remap(a.jet(p.subspan(0, da), order), L, ma) * remap(b.jet(p.subspan(da), order), L, mb);
  };
  return SampledFunction::from_jet(box, jet, std::min(a.max_order(), b.max_order()), value);
}

SpectralCutoff make_cutoff(int m, int n, double R, double outer, double s, int grid, int padding) {
  SpectralCutoff c;
  c.m = m;
  c.n = n;
  c.R = R;
  c.half_width = outer;
  c.grid = grid;
  c.padding = padding;
  c.lambda = tensor_product(gevrey_bump(s, R, outer, m), gevrey_bump(s, R, outer, n));
  c.validate();
  return c;
}

Complex SpectralData::at(std::span<const std::size_t> idx) const {
  std::size_t flat = 0;
  for (std::size_t i : idx) flat = flat * axis_size() + i;
  return values.at(flat);
}

void SpectralData::write_csv(std::ostream& os) const {
  if (m != 1 || n != 1) throw CapabilityError("SpectralData::write_csv: only m = n = 1");
  os << "sigma,theta,re,im\n";
  const std::size_t K = axis_size();
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < K; ++b) {
      const Complex v = values[a * K + b];
      os << frequencies[a] << ',' << frequencies[b] << ',' << v.real() << ',' << v.imag() << '\n';
    }
}

SpectralData fourier_of(const DistributionData& u, const SpectralCutoff& cutoff, double tail_tol) {
  cutoff.validate();
  const int m = cutoff.m, n = cutoff.n, N = m + n;
  const std::size_t Mp = padded_size(cutoff);

  SpectralData F;
  F.m = m;
  F.n = n;
  F.frequencies = frequency_axis(cutoff);
  F.step = F.frequencies[1] - F.frequencies[0];
  F.values.assign(ipow(Mp, N), 0.0);

  if (u.density) {
    if (u.density->dim() != cutoff.dim()) throw ParameterError("fourier_of: density has the wrong dimension");
    const auto& lam = cutoff.lambda;
    const auto& dens = *u.density;
    F.values = transform([&](Point y) { return lam.value(y) * dens.value(y); }, cutoff, N, +1);
    check_band(F.values, band_flags(Mp, N), tail_tol, "density");
  }

  const std::size_t tsize = ipow(Mp, n);
  for (const auto& pf : u.points) {
    if (pf.location.size() != static_cast<std::size_t>(m) || pf.order.dim() != static_cast<std::size_t>(m) ||
        pf.t_profile.dim() != static_cast<std::size_t>(n))
      throw ParameterError("fourier_of: point functional has the wrong dimension");
    double r2 = 0.0;
    for (double v : pf.location) r2 += v * v;
    if (std::sqrt(r2) >= 0.5 * cutoff.R) throw PreconditionError("fourier_of: point functional outside B_{R/2}");

    std::vector<double> y(cutoff.dim());
    std::copy(pf.location.begin(), pf.location.end(), y.begin());
    const auto G = transform(
        [&](Point t) {
          std::vector<double> yy(y);
          std::copy(t.begin(), t.end(), yy.begin() + m);
          return cutoff.lambda.value(yy) * pf.t_profile.value(t);
        },
        cutoff, n, +1);
    check_band(G, band_flags(Mp, n), tail_tol, "t-profile");

    // ℱ of the action ψ ↦ (-1)^{|a|} ∂_x^a ψ(x0, ·) is (-iσ)^a e^{i⟨x0,σ⟩} times the t-transform.
    std::vector<std::vector<Complex>> axes(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      auto& ax = axes[static_cast<std::size_t>(i)];
      ax.resize(Mp);
      const int a = pf.order[static_cast<std::size_t>(i)];
      const double x0 = pf.location[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < Mp; ++k) {
        const double sg = F.frequencies[k];
        ax[k] = std::pow(-kI * sg, a) * std::exp(kI * x0 * sg);
      }
    }
    const auto P = outer_product(axes);
    for (std::size_t xs = 0; xs < P.size(); ++xs) {
      const Complex c = pf.weight * P[xs];
      Complex* row = F.values.data() + xs * tsize;
      for (std::size_t ts = 0; ts < tsize; ++ts) row[ts] += c * G[ts];
    }
  }
  return F;
}

TracePairing::TracePairing(const SpectralData& F, const SpectralCutoff& cutoff, const SampledFunction& phi,
                           TraceOptions opt)
    : n_(F.n), per_axis_(F.axis_size()), freq_(F.frequencies), opt_(opt) {
  const int m = F.m;
  if (phi.dim() != static_cast<std::size_t>(m)) throw ParameterError("trace: phi has the wrong dimension");
  if (F.values.size() != ipow(per_axis_, m + n_) || cutoff.m != m || cutoff.n != n_ ||
      padded_size(cutoff) != per_axis_)
    throw ParameterError("trace: spectral data does not match the cutoff");

  auto phi_at = [&](Point x) -> Complex { return phi.domain().contains(x) ? phi.value(x) : 0.0; };
  double peak = 0.0, outside = 0.0;
  for (const auto& x : box_grid(Box::cube(static_cast<std::size_t>(m), cutoff.half_width), 41)) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double a = std::abs(phi_at(x));
    peak = std::max(peak, a);
    if (std::sqrt(r2) > cutoff.R * (1.0 + 1e-12)) outside = std::max(outside, a);
  }
  if (outside > 1e-12 * std::max(1.0, peak)) throw PreconditionError("trace: phi is not supported in B_R");

  const auto Phi = transform(phi_at, cutoff, m, -1);
  const auto xband = band_flags(per_axis_, m);
  const std::size_t tsize = ipow(per_axis_, n_);
  reduced_.assign(tsize, 0.0);
  mass_.assign(tsize, 0.0);
  band_mass_.assign(tsize, 0.0);
  for (std::size_t xs = 0; xs < Phi.size(); ++xs) {
    const Complex ph = Phi[xs];
    if (ph == 0.0) continue;
    const Complex* row = F.values.data() + xs * tsize;
    for (std::size_t ts = 0; ts < tsize; ++ts) {
      const Complex v = row[ts] * ph;
      reduced_[ts] += v;
      mass_[ts] += std::abs(v);
      if (xband[xs]) band_mass_[ts] += std::abs(v);
    }
  }
  norm_ = std::pow(F.step / kTwoPi, m + n_);
}

Complex TracePairing::evaluate(Point t, const MultiIndex& beta, double* tail) const {
  if (t.size() != static_cast<std::size_t>(n_) || beta.dim() != static_cast<std::size_t>(n_))
    throw ParameterError("trace: slice point or order has the wrong dimension");
  std::vector<std::vector<Complex>> axes(static_cast<std::size_t>(n_));
  for (std::size_t j = 0; j < axes.size(); ++j) {
    axes[j].resize(per_axis_);
    for (std::size_t k = 0; k < per_axis_; ++k) {
      const double th = freq_[k];
      axes[j][k] = std::exp(-kI * t[j] * th) * std::pow(-kI * th, beta[j]);
    }
  }
  const auto Theta = outer_product(axes);
  const auto tband = band_flags(per_axis_, n_);
  Complex sum = 0.0;
  double outer = 0.0;
  for (std::size_t ts = 0; ts < Theta.size(); ++ts) {
    sum += reduced_[ts] * Theta[ts];
    outer += (tband[ts] ? mass_[ts] : band_mass_[ts]) * std::abs(Theta[ts]);
  }
  if (tail) *tail = outer * norm_;
  return sum * norm_;
}

Complex TracePairing::value(Point t, const MultiIndex& beta) const {
  double tl = 0.0;
  const Complex v = evaluate(t, beta, &tl);
  if (tl > opt_.tail_tol) {
    std::ostringstream os;
    os << "trace: outer frequency band carries " << tl << " (tolerance " << opt_.tail_tol << ") at order "
       << beta.to_string();
    throw ResolutionError(os.str());
  }
  return v;
}

Complex TracePairing::value(Point t) const { return value(t, MultiIndex(static_cast<std::size_t>(n_))); }

double TracePairing::tail(Point t, const MultiIndex& beta) const {
  double tl = 0.0;
  evaluate(t, beta, &tl);
  return tl;
}

Complex trace_at(const SpectralData& F, const SpectralCutoff& cutoff, Point t, const SampledFunction& phi,
                 const TraceOptions& opt) {
  return TracePairing(F, cutoff, phi, opt).value(t);
}

Complex trace_at(const DistributionData& u, const SpectralCutoff& cutoff, Point t, const SampledFunction& phi,
                 const TraceOptions& opt) {
  return trace_at(fourier_of(u, cutoff), cutoff, t, phi, opt);
}

TraceRegularity trace_t_regularity(const DistributionData& u, const SpectralCutoff& cutoff,
                                   const SampledFunction& phi, const std::vector<std::vector<double>>& t_grid,
                                   int order_cap, double s, const TraceOptions& opt) {
  if (order_cap < 1 || order_cap > 6) throw ParameterError("trace_t_regularity: order_cap must lie in 1..6");
  if (!(s > 1.0)) throw ParameterError("trace_t_regularity: s must exceed 1");
  const TracePairing P(fourier_of(u, cutoff), cutoff, phi, opt);

  TraceRegularity out;
  out.t_grid = t_grid;
  out.s = s;
  out.orders = indices_up_to(static_cast<std::size_t>(cutoff.n), order_cap);
  for (const auto& t : t_grid) {
    auto& row = out.derivatives.emplace_back();
    auto& tl = out.tails.emplace_back();
    for (const auto& b : out.orders) {
      double tail = 0.0;
      row.push_back(b.order() == 0 ? P.value(t, b) : P.evaluate(t, b, &tail));
      tl.push_back(b.order() == 0 ? P.tail(t, b) : tail);
    }
  }

  // Constants are fitted on |value| + tail so that the fitted orders satisfy the bound exactly.
  double b1 = 0.0;
  for (std::size_t i = 0; i < out.derivatives.size(); ++i)
    for (std::size_t k = 0; k < out.orders.size(); ++k) {
      const double e = std::abs(out.derivatives[i][k]) + out.tails[i][k];
      if (out.orders[k].order() == 0) out.C = std::max(out.C, e);
      if (out.orders[k].order() == 1) b1 = std::max(b1, e);
    }

  if (out.C <= 1e-12) {
    // Numerically zero trace: every derivative must vanish too.
    double worst = 0.0;
    for (const auto& row : out.derivatives)
      for (Complex v : row) worst = std::max(worst, std::abs(v));
    out.b = 1.0;
    out.worst_ratio = worst;
    out.gevrey_certificate = worst <= 1e-12;
    return out;
  }
  out.b = std::max(1.0, b1 / out.C);
  for (std::size_t i = 0; i < out.derivatives.size(); ++i)
    for (std::size_t k = 0; k < out.orders.size(); ++k) {
      const int o = out.orders[k].order();
      const double bound = out.C * std::pow(out.b, o) * std::pow(factorial(o), s);
      out.worst_ratio = std::max(out.worst_ratio, (std::abs(out.derivatives[i][k]) + out.tails[i][k]) / bound);
    }
  out.gevrey_certificate = out.worst_ratio <= 1.0;
  return out;
}

FourierDecayReport fourier_gevrey_decay_check(const SampledFunction& phi, double R, std::span<const double> xi_grid,
                                              double max_slack) {
  const auto& g = phi.declared_gevrey();
  if (!g) throw ParameterError("fourier_gevrey_decay_check: phi has no declared Gevrey constants");
  const int m = static_cast<int>(phi.dim());
  const double r = g->h, s = g->s;
  const Box K = Box::cube(phi.dim(), R);

  FourierDecayReport rep;
  rep.seminorm = gevrey_seminorm(phi, *g, K);
  const double vol = ball_volume(m, R);
  for (double xi : xi_grid) {
    QuadratureRule rule;
    rule.points_per_axis = 32;
    rule.panels = std::max(4, static_cast<int>(std::ceil(std::abs(xi) * R / 4.0)));
    const Complex F = integrate_rm(
        [&](Point x) { return phi.value(x) * std::exp(kI * xi * x[0]); }, rule, K);
    const double mag = std::abs(F);
    const double bound = vol * rep.seminorm * std::exp(-s * std::pow(std::abs(xi) / r, 1.0 / s));
    rep.xi.push_back(xi);
    rep.magnitude.push_back(mag);
    rep.bound.push_back(bound);
    if (mag == 0.0) continue;
    const double ratio = bound > 0.0 ? mag / bound : std::numeric_limits<double>::infinity();
    if (ratio > rep.slack) {
      rep.slack = ratio;
      rep.worst_xi = xi;
    }
  }
  rep.ok = rep.slack <= max_slack;

  // Envelope: maxima over 8 consecutive blocks, then -log|ℱφ| ≈ c|ξ|^κ fitted on a log-log scale.
  const std::size_t blocks = 8, nx = rep.xi.size();
  std::vector<double> lx, ly;
  const double m0 = nx ? *std::max_element(rep.magnitude.begin(), rep.magnitude.end()) : 0.0;
  for (std::size_t b = 0; b < blocks && nx >= blocks; ++b) {
    std::size_t best = b * nx / blocks;
    for (std::size_t i = b * nx / blocks; i < (b + 1) * nx / blocks; ++i)
      if (rep.magnitude[i] > rep.magnitude[best]) best = i;
    const double v = rep.magnitude[best] / m0;
    if (v > 1e-300 && v < 0.5 && std::abs(rep.xi[best]) > 0.0) {
      lx.push_back(std::log(std::abs(rep.xi[best])));
      ly.push_back(std::log(-std::log(v)));
    }
  }
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    rep.fitted_exponent = sxx > 0 ? sxy / sxx : 0.0;
  }
  return rep;
}

Complex pair(const DistributionData& u, const SampledFunction& Psi, const Box& box, const QuadratureRule& rule) {
  if (box.dim() != Psi.dim()) throw ParameterError("pair: box and test function dimensions differ");
  Complex total = 0.0;
  if (u.density) total += integrate_rm([&](Point y) { return u.density->value(y) * Psi.value(y); }, rule, box);
  for (const auto& pf : u.points) {
    const std::size_t m = pf.location.size(), n = pf.t_profile.dim();
    Box tb;
    tb.lo.assign(box.lo.begin() + static_cast<long>(m), box.lo.end());
    tb.hi.assign(box.hi.begin() + static_cast<long>(m), box.hi.end());
    MultiIndex a(m + n);
    for (std::size_t i = 0; i < m; ++i) a[i] = pf.order[i];
    const double sign = (pf.order.order() % 2) ? -1.0 : 1.0;
    total += pf.weight * sign *
             integrate_rm(
                 [&](Point t) {
                   std::vector<double> y(pf.location);
                   y.insert(y.end(), t.begin(), t.end());
                   return pf.t_profile.value(t) * Psi.derivative(a, y);
                 },
                 rule, tb);
  }
  return total;
}

ConsistencyReport trace_consistency(const DistributionData& u, const SpectralCutoff& cutoff,
                                    const SpectralCutoff& other, const SampledFunction& phi,
                                    const SampledFunction& psi, int t_nodes) {
  ConsistencyReport rep;
  const Box V = Box::cube(cutoff.dim(), cutoff.R);
  QuadratureRule rule;
  rule.points_per_axis = 32;
  rule.panels = 8;
  rep.direct = pair(u, tensor_product(phi, psi), V, rule);

  const TracePairing A(fourier_of(u, cutoff), cutoff, phi);
  const TracePairing B(fourier_of(u, other), other, phi);
  QuadratureRule trule;
  trule.points_per_axis = t_nodes;
  trule.panels = 4;
  rep.via_trace = integrate_rm(
      [&](Point t) {
        const Complex a = A.value(t);
        rep.lambda_spread = std::max(rep.lambda_spread, std::abs(a - B.value(t)));
        return a * psi.value(t);
      },
      trule, Box::cube(static_cast<std::size_t>(cutoff.n), cutoff.R));
  rep.residual = std::abs(rep.direct - rep.via_trace);
  return rep;
}

}  // namespace btlab
