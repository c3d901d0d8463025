#include "btlab/poincare.hpp"

#include "btlab/errors.hpp"
#include "btlab/faa_di_bruno.hpp"
#include "btlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace btlab {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

void check_strict(const std::vector<int>& idx) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 1) throw ParameterError("index sets are 1-based");
    if (i && idx[i] <= idx[i - 1]) throw ParameterError("index set must be strictly increasing");
  }
}

/// Multiplies the coefficient of each multi-index α by Π factor_v^{α_v}.
Jet scale_vars(Jet a, std::span<const double> factor) {
  const JetLayout* L = a.layout();
  for (std::size_t i = 0; i < L->size(); ++i) {
    double s = 1.0;
    const MultiIndex& al = L->index(i);
    for (std::size_t v = 0; v < factor.size(); ++v)
      for (int r = 0; r < al[v]; ++r) s *= factor[v];
    a.coeff(i) *= s;
  }
  return a;
}

/// One signed contribution to an output coefficient, from f with index j.
struct Term {
  double sign;
  int j;  // 1-based
  SampledFunction f;
};

/// (𝕃 applied to coefficient jets)_{I,K} = (-1)^p Σ_{j ∈ K} ε(j, K∖j) L_j f_{I,K∖j}.
std::map<FormKey, Jet> L_apply(const std::map<FormKey, Jet>& jets, int p, int n, const FrameJets& F, int m) {
  std::map<FormKey, Jet> out;
  const double sp = (p % 2) ? -1.0 : 1.0;
  for (const auto& [key, jet] : jets)
    for (int j = 1; j <= n; ++j) {
      if (key.J.contains(j)) continue;
      Jet term = apply_field(F, VectorField{VectorField::L, j - 1}, jet, m) * (sp * epsilon_sign(j, key.J));
      FormKey k{key.I, key.J.with(j)};
      auto it = out.find(k);
      if (it == out.end())
        out.emplace(k, std::move(term));
      else
        it->second += term;
    }
  return out;
}

int min_order(const std::vector<Term>& terms) {
  int d = SampledFunction::kUnlimited;
  for (const auto& t : terms) d = std::min(d, t.f.max_order());
  return d;
}

}  // namespace

IndexSet::IndexSet(std::initializer_list<int> idx) : idx_(idx) { check_strict(idx_); }
IndexSet::IndexSet(std::vector<int> idx) : idx_(std::move(idx)) { check_strict(idx_); }

std::vector<IndexSet> IndexSet::all(int r, int k) {
  std::vector<IndexSet> out;
  if (k < 0 || k > r) return out;
  std::vector<int> c(sz(k));
  for (int i = 0; i < k; ++i) c[sz(i)] = i + 1;
  while (true) {
    out.emplace_back(c);
    int i = k - 1;
    while (i >= 0 && c[sz(i)] == r - k + i + 1) --i;
    if (i < 0) break;
    ++c[sz(i)];
    for (int l = i + 1; l < k; ++l) c[sz(l)] = c[sz(l - 1)] + 1;
  }
  return out;
}

bool IndexSet::contains(int j) const { return std::binary_search(idx_.begin(), idx_.end(), j); }

IndexSet IndexSet::without(int j) const {
  std::vector<int> v;
  for (int i : idx_)
    if (i != j) v.push_back(i);
  return IndexSet(std::move(v));
}

IndexSet IndexSet::with(int j) const {
  if (contains(j)) throw PreconditionError("index already present");
  std::vector<int> v = idx_;
  v.insert(std::upper_bound(v.begin(), v.end(), j), j);
  return IndexSet(std::move(v));
}

std::string IndexSet::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < idx_.size(); ++i) s += (i ? "," : "") + std::to_string(idx_[i]);
  return s + "}";
}

int epsilon_sign(int j, const IndexSet& J) {
  if (J.contains(j)) throw PreconditionError("epsilon_sign: j must not belong to J");
  int below = 0;
  for (int i : J.entries()) below += i < j;
  return below % 2 ? -1 : 1;
}

FormPQ::FormPQ(int m, int n, int p, int q) : m_(m), n_(n), p_(p), q_(q) {
  if (m < 0 || n < 1 || p < 0 || p > m || q < 0 || q > n) throw ParameterError("form degree out of range");
}

void FormPQ::set(const IndexSet& I, const IndexSet& J, SampledFunction f) {
  if (I.size() != sz(p_) || J.size() != sz(q_) || I.max() > m_ || J.max() > n_)
    throw ParameterError("form key " + I.to_string() + J.to_string() + " does not fit the degree");
  if (f.dim() != coefficient_dim()) throw ParameterError("form coefficient has the wrong dimension");
  coeffs_.insert_or_assign(FormKey{I, J}, std::move(f));
}

const SampledFunction* FormPQ::get(const IndexSet& I, const IndexSet& J) const {
  auto it = coeffs_.find(FormKey{I, J});
  return it == coeffs_.end() ? nullptr : &it->second;
}

Complex FormPQ::value(const IndexSet& I, const IndexSet& J, Point p) const {
  const auto* f = get(I, J);
  return f ? f->value(p) : Complex{};
}

FormPQ L_operator(const FormPQ& f, const StructureMap& S) {
  if (f.m() != S.m() || f.n() != S.n()) throw ParameterError("L_operator: form and structure dimensions differ");
  if (f.q() == f.n()) return FormPQ(f.m(), f.n(), f.p(), f.q());  // only the zero form lives in degree q + 1
  FormPQ out(f.m(), f.n(), f.p(), f.q() + 1);
  std::map<FormKey, std::vector<Term>> terms;
  const double sp = (f.p() % 2) ? -1.0 : 1.0;
  for (const auto& [key, g] : f.coefficients())
    for (int j = 1; j <= f.n(); ++j)
      if (!key.J.contains(j)) terms[FormKey{key.I, key.J.with(j)}].push_back({sp * epsilon_sign(j, key.J), j, g});
  const int m = S.m();
  for (auto& [key, list] : terms) {
    auto jet = [S, list, m](Point p, int order) {
      const FrameJets F = frame_jets(S, p, order);
      Jet acc(JetLayout::get(S.N(), order), 0.0);
      for (const auto& t : list)
        acc += apply_field(F, VectorField{VectorField::L, t.j - 1}, t.f.jet(p, order + 1), m) * t.sign;
      return acc;
    };
    const int depth = min_order(list);
    out.set(key.I, key.J,
            SampledFunction::from_jet(list.front().f.domain(), jet,
                                      depth == SampledFunction::kUnlimited ? depth : depth - 1));
  }
  return out;
}

FormPQ d_t(const FormPQ& F) {
  if (F.m() != 0) throw ParameterError("d_t acts on forms in the t-variables only");
  if (F.q() == F.n()) return FormPQ(0, F.n(), 0, F.q());
  FormPQ out(0, F.n(), 0, F.q() + 1);
  std::map<FormKey, std::vector<Term>> terms;
  for (const auto& [key, g] : F.coefficients())
    for (int j = 1; j <= F.n(); ++j)
      if (!key.J.contains(j)) terms[FormKey{key.I, key.J.with(j)}].push_back({double(epsilon_sign(j, key.J)), j, g});
  const int n = F.n();
  for (auto& [key, list] : terms) {
    auto jet = [list, n](Point p, int order) {
      Jet acc(JetLayout::get(n, order), 0.0);
      for (const auto& t : list) acc += t.f.jet(p, order + 1).partial(t.j - 1) * t.sign;
      return acc;
    };
    const int depth = min_order(list);
    out.set(key.I, key.J,
            SampledFunction::from_jet(Box::unbounded(sz(n)), jet,
                                      depth == SampledFunction::kUnlimited ? depth : depth - 1));
  }
  return out;
}

FormPQ K_q(const FormPQ& F, const QuadratureRule& sigma_rule) {
  if (F.m() != 0) throw ParameterError("K_q acts on forms in the t-variables only");
  if (F.q() == 0) throw PreconditionError("K_q needs q >= 1");
  sigma_rule.validate();
  const int n = F.n(), q = F.q();
  FormPQ out(0, n, 0, q - 1);
  std::map<FormKey, std::vector<Term>> terms;
  for (const auto& [key, g] : F.coefficients())
    for (int j : key.J.entries()) {
      const IndexSet rest = key.J.without(j);
      terms[FormKey{key.I, rest}].push_back({double(epsilon_sign(j, rest)), j, g});
    }
  auto nodes = std::make_shared<const AxisNodes>(axis_nodes(sigma_rule, 0.0, 1.0));
  for (auto& [key, list] : terms) {
    auto jet = [list, n, q, nodes](Point t, int order) {
      const JetLayout* L = JetLayout::get(n, order);
      Jet acc(L, 0.0);
      std::vector<double> st(sz(n));
      for (const auto& term : list) {
        Jet integral(L, 0.0);
        for (std::size_t i = 0; i < nodes->x.size(); ++i) {
          const double s = nodes->x[i];
          for (int v = 0; v < n; ++v) st[sz(v)] = s * t[sz(v)];
          const std::vector<double> factor(sz(n), s);
          integral += scale_vars(term.f.jet(Point(st), order), factor) * (nodes->w[i] * std::pow(s, q - 1));
        }
        acc += Jet::variable(L, term.j - 1, t[sz(term.j - 1)]) * integral * term.sign;
      }
      return acc;
    };
    out.set(key.I, key.J, SampledFunction::from_jet(Box::unbounded(sz(n)), jet, min_order(list)));
  }
  return out;
}

double homotopy_check(const FormPQ& F, Point t, const QuadratureRule& sigma_rule) {
  const int n = F.n(), q = F.q();
  const FormPQ dK = d_t(K_q(F, sigma_rule));
  std::optional<FormPQ> Kd;
  if (q < n) Kd = K_q(d_t(F), sigma_rule);
  double worst = 0.0;
  for (const auto& J : IndexSet::all(n, q)) {
    const IndexSet I;
    Complex r = F.value(I, J, t) - dK.value(I, J, t);
    if (Kd) r -= Kd->value(I, J, t);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

std::map<FormKey, Complex> G_tau_form(const FormPQ& f, const ApproxConfig& cfg, std::span<const Complex> z, Point t) {
  std::map<FormKey, Complex> out;
  for (const auto& [key, g] : f.coefficients()) out[key] = G_tau_free(g, cfg, z, t);
  return out;
}

double closedness_aggregate(const FormPQ& f, const ApproxConfig& cfg, Point p) {
  const auto& S = cfg.structure;
  const FormPQ Lf = L_operator(f, S);
  const std::vector<double> t(p.begin() + S.m(), p.end());
  double worst = 0.0;
  for (const auto& [key, v] : G_tau_form(Lf, cfg, S.Z(p), Point(t))) worst = std::max(worst, std::abs(v));
  return worst;
}

double closedness_residual(const FormPQ& f, const StructureMap& S, double R, int per_axis) {
  const FormPQ Lf = L_operator(f, S);
  double worst = 0.0;
  for (const auto& x : ball_grid(sz(S.m()), R, per_axis))
    for (const auto& t : ball_grid(sz(S.n()), R, per_axis)) {
      std::vector<double> p(x);
      p.insert(p.end(), t.begin(), t.end());
      for (const auto& [key, g] : Lf.coefficients()) worst = std::max(worst, std::abs(g.value(Point(p))));
    }
  return worst;
}

FormPQ K_tau(const FormPQ& f, const ApproxConfig& cfg) {
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n(), N = S.N(), p = f.p(), q = f.q();
  if (f.m() != m || f.n() != n) throw ParameterError("K_tau: form and structure dimensions differ");
  if (q < 1) throw PreconditionError("K_tau needs q >= 1");
  FormPQ out(m, n, p, q - 1);
  const double sp = (p % 2) ? -1.0 : 1.0;
  std::map<FormKey, std::vector<Term>> terms;
  for (const auto& [key, g] : f.coefficients())
    for (int j : key.J.entries()) {
      const IndexSet rest = key.J.without(j);
      terms[FormKey{key.I, rest}].push_back({sp * epsilon_sign(j, rest), j, g});
    }
  QuadratureRule srule = cfg.rule;
  srule.panels = 1;
  auto sigma = std::make_shared<const AxisNodes>(axis_nodes(srule, 0.0, 1.0));
  auto c = std::make_shared<const ApproxConfig>(cfg);
  for (auto& [key, list] : terms) {
    // A_IJ(x,t) = ∫_0^1 σ^{q-1} (τ/π)^{m/2} ∫ e^{-τ⟨Z(x,t) - Z(x',σt)⟩²} χ(x') f(x',σt) det Z_x(x',σt) dx' dσ,
    // as a jet in (x,t): x' is the integration variable, σt carries the t-dependence.
    auto jet = [c, list, sigma, m, n, N, q](Point P, int order) {
      const auto& S = c->structure;
      const JetLayout* L = JetLayout::get(N, order);
      Jet acc(L, 0.0);
      const auto window = gaussian_window(*c, P.subspan(0, sz(m)));
      if (!window) return acc;
      const auto Zp = S.Z_jets(P, order);
      std::vector<int> keep_t(sz(N), -1);
      for (int j = 0; j < n; ++j) keep_t[sz(m + j)] = m + j;
      const double g = std::pow(c->tau / std::numbers::pi, 0.5 * m);
      std::vector<double> qpt(sz(N)), factor(sz(N), 1.0);
      std::vector<Complex> part(L->size());
      for (const auto& term : list) {
        Jet A(L, 0.0);
        for (std::size_t si = 0; si < sigma->x.size(); ++si) {
          const double s = sigma->x[si];
          for (int j = 0; j < n; ++j) {
            qpt[sz(m + j)] = s * P[sz(m + j)];
            factor[sz(m + j)] = s;
          }
          integrate_rm(
              [&](Point y, std::span<Complex> v) {
                const Complex cv = c->chi.value(y);
                if (cv == Complex{}) {
                  std::fill(v.begin(), v.end(), Complex{});
                  return;
                }
                std::copy(y.begin(), y.end(), qpt.begin());
                const auto Zq = S.Z_jets(Point(qpt), order);
                Jet phase(L, 0.0);
                for (int k = 0; k < m; ++k) {
                  const Jet d = Zp[sz(k)] - scale_vars(remap(Zq[sz(k)], L, keep_t), factor);
                  phase -= d * d;
                }
                const Jet amp = scale_vars(remap(term.f.jet(Point(qpt), order), L, keep_t), factor) *
                                scale_vars(remap(detZx_jet(S, Point(qpt), order), L, keep_t), factor);
                const Jet val = exp_phase_jet(c->tau, phase) * amp * cv;
                for (std::size_t i = 0; i < L->size(); ++i) v[i] = val.coeff(i);
              },
              L->size(), c->rule, *window, part);
          const double w = sigma->w[si] * std::pow(s, q - 1) * g;
          for (std::size_t i = 0; i < L->size(); ++i) A.coeff(i) += w * part[i];
        }
        acc += Jet::variable(L, m + term.j - 1, P[sz(m + term.j - 1)]) * A * term.sign;
      }
      return acc;
    };
    int depth = min_order(list);
    for (int k = 0; k < m; ++k) depth = std::min(depth, S.phi(k).max_order() - 1);
    out.set(key.I, key.J, SampledFunction::from_jet(S.domain(), jet, depth));
  }
  return out;
}

PoincareReport approximate_solve(const FormPQ& f, const ApproxConfig& cfg, std::span<const double> taus,
                                 int grid_per_axis) {
  cfg.validate();
  const auto& S = cfg.structure;
  const int m = S.m(), n = S.n();
  if (f.q() < 1 || f.q() > n) throw PreconditionError("approximate_solve needs 1 <= q <= n");
  if (f.m() != m || f.n() != n) throw ParameterError("approximate_solve: form and structure dimensions differ");
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1])) throw ParameterError("tau grid must be strictly increasing");
  PoincareReport rep;
  rep.closedness = closedness_residual(f, S, cfg.radii.R);
  if (rep.closedness > 1e-8)
    throw PreconditionError("form is not L-closed: sampled residual " + std::to_string(rep.closedness));

  const auto grid = U_grid(S, cfg.radii, grid_per_axis);
  rep.grid_points = grid.size();
  for (double tau : taus) {
    const ApproxConfig c = cfg.with_tau(tau);
    FormPQ g = K_tau(f, c);
    std::vector<std::map<FormKey, double>> per(grid.size());
    parallel_for(grid.size(), [&](std::size_t gi) {
      const Point p(grid[gi]);
      std::map<FormKey, Jet> jets;
      for (const auto& [key, coeff] : g.coefficients()) jets.emplace(key, coeff.jet(p, 1));
      const auto Lg = L_apply(jets, g.p(), n, frame_jets(S, p, 0), m);
      auto& row = per[gi];
      for (const auto& [key, jet] : Lg) row[key] = std::abs(jet.value() - f.value(key.I, key.J, p));
      for (const auto& [key, coeff] : f.coefficients())
        if (!Lg.count(key)) row[key] = std::abs(coeff.value(p));
    });
    std::map<FormKey, double> worst;
    double total = 0.0;
    for (const auto& row : per)
      for (const auto& [key, v] : row) {
        worst[key] = std::max(worst[key], v);
        total = std::max(total, v);
      }
    rep.tau_grid.push_back(tau);
    rep.residuals.push_back(total);
    rep.per_coefficient.push_back(std::move(worst));
    rep.solutions.push_back(std::move(g));
  }
  return rep;
}

}  // namespace btlab
