#include "btlab/structure.hpp"

#include "btlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace btlab {

StructureMap::StructureMap(int m, int n, std::vector<SampledFunction> phi, std::string label)
    : m_(m), n_(n), phi_(std::move(phi)), label_(std::move(label)) {
  if (m < 1 || n < 1) throw ParameterError("structure needs m >= 1 and n >= 1");
  if (phi_.size() != static_cast<std::size_t>(m)) throw ParameterError("structure needs one φ component per x");
  for (const auto& f : phi_)
    if (f.dim() != static_cast<std::size_t>(N())) throw ParameterError("φ components must live on R^{m+n}");
  const std::vector<double> origin(static_cast<std::size_t>(N()), 0.0);
  if (!domain().contains(Point(origin))) throw ParameterError("φ must be defined at the origin");
  for (int k = 0; k < m; ++k) {
    const Jet j = phi_[static_cast<std::size_t>(k)].jet(Point(origin), 1);
    if (std::abs(j.value()) > 1e-10) throw ParameterError("normal form violated: φ(0,0) != 0");
    for (int l = 0; l < m; ++l) {
      MultiIndex e(static_cast<std::size_t>(N()));
      e[static_cast<std::size_t>(l)] = 1;
      if (std::abs(j.derivative(e)) > 1e-10) throw ParameterError("normal form violated: d_xφ(0,0) != 0");
    }
  }
}

Box StructureMap::domain() const {
  Box b = Box::unbounded(static_cast<std::size_t>(N()));
  for (const auto& f : phi_)
    for (std::size_t i = 0; i < b.dim(); ++i) {
      b.lo[i] = std::max(b.lo[i], f.domain().lo[i]);
      b.hi[i] = std::min(b.hi[i], f.domain().hi[i]);
    }
  return b;
}

std::vector<Complex> StructureMap::Z(Point p) const {
  std::vector<Complex> z(static_cast<std::size_t>(m_));
  for (int k = 0; k < m_; ++k)
    z[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k)] + Complex(0, 1) * phi_[static_cast<std::size_t>(k)].value(p);
  return z;
}

std::vector<Jet> StructureMap::Z_jets(Point p, int order) const {
  const JetLayout* L = JetLayout::get(N(), order);
  std::vector<Jet> z;
  for (int k = 0; k < m_; ++k)
    z.push_back(Jet::variable(L, k, p[static_cast<std::size_t>(k)]) +
                phi_[static_cast<std::size_t>(k)].jet(p, order) * Complex(0, 1));
  return z;
}

Expression::Symbols structure_symbols(int m, int n, bool with_Z) {
  Expression::Symbols s;
  for (int k = 0; k < m; ++k) s["x" + std::to_string(k + 1)] = k;
  for (int j = 0; j < n; ++j) s["t" + std::to_string(j + 1)] = m + j;
  if (m == 1) s["x"] = 0;
  if (n == 1) s["t"] = m;
  if (with_Z) {
    for (int k = 0; k < m; ++k) s["Z" + std::to_string(k + 1)] = m + n + k;
    if (m == 1) s["Z"] = m + n;
  }
  return s;
}

namespace {

SampledFunction expression_function(std::shared_ptr<const Expression> e, int N) {
  auto value = [e, N](Point p) {
    std::vector<Complex> v(p.begin(), p.end());
    return e->eval(std::span<const Complex>(v));
  };
  auto jet = [e, N](Point p, int order) {
    const JetLayout* L = JetLayout::get(N, order);
    std::vector<Jet> v;
    for (int i = 0; i < N; ++i) v.push_back(Jet::variable(L, i, p[static_cast<std::size_t>(i)]));
    return e->eval(std::span<const Jet>(v));
  };
  return SampledFunction::from_jet(Box::unbounded(static_cast<std::size_t>(N)), jet, SampledFunction::kUnlimited,
                                   value);
}

}  // namespace

StructureMap structure_from_expressions(int m, int n, const std::vector<std::string>& phi, std::string label) {
  if (phi.size() != static_cast<std::size_t>(m)) throw ParameterError("need one φ expression per x component");
  const auto symbols = structure_symbols(m, n);
  std::vector<SampledFunction> fs;
  for (const auto& text : phi)
    fs.push_back(expression_function(std::make_shared<const Expression>(Expression::parse(text, symbols)), m + n));
  return StructureMap(m, n, std::move(fs), std::move(label));
}

StructureMap translation_structure(int m, int n) {
  std::vector<SampledFunction> fs(static_cast<std::size_t>(m), SampledFunction::constant(static_cast<std::size_t>(m + n), 0.0));
  return StructureMap(m, n, std::move(fs), "translation");
}

StructureMap builtin_structure(const std::string& name) {
  if (name == "translation") return translation_structure(1, 1);
  if (name == "mizohata") return structure_from_expressions(1, 1, {"t^2/2"}, name);
  if (name == "shear") return structure_from_expressions(1, 1, {"x*t"}, name);
  if (name == "cr2") return structure_from_expressions(2, 1, {"(t^2 + x1*x2)/2", "x1*t + t^2/2"}, name);
  if (name == "mizohata2") return structure_from_expressions(1, 2, {"(t1^2 + t2^2)/2"}, name);
  throw ParameterError("unknown built-in structure '" + name + "'");
}

SampledFunction structure_function(const StructureMap& S, const std::string& text) {
  const int m = S.m(), N = S.N();
  auto e = std::make_shared<const Expression>(Expression::parse(text, structure_symbols(m, S.n(), true)));
  auto value = [S, e](Point p) {
    std::vector<Complex> v(p.begin(), p.end());
    for (Complex z : S.Z(p)) v.push_back(z);
    return e->eval(std::span<const Complex>(v));
  };
  auto jet = [S, e, N](Point p, int order) {
    const JetLayout* L = JetLayout::get(N, order);
    std::vector<Jet> v;
    for (int i = 0; i < N; ++i) v.push_back(Jet::variable(L, i, p[static_cast<std::size_t>(i)]));
    for (auto& z : S.Z_jets(p, order)) v.push_back(std::move(z));
    return e->eval(std::span<const Jet>(v));
  };
  int depth = SampledFunction::kUnlimited;
  for (int k = 0; k < m; ++k) depth = std::min(depth, S.phi(k).max_order());
  return SampledFunction::from_jet(S.domain(), jet, depth, value);
}

LipschitzReport validate_lipschitz(const StructureMap& S, double R, int grid) {
  if (!(R > 0)) throw ParameterError("validate_lipschitz needs R > 0");
  if (grid < 8) throw ParameterError("validate_lipschitz needs at least 8 grid points per axis");
  const int m = S.m(), n = S.n();
  if (!S.domain().contains(Box::cube(static_cast<std::size_t>(S.N()), R)))
    throw DomainError("φ oracle is not defined on the closed box around V");
  const auto xs = ball_grid(static_cast<std::size_t>(m), R, grid);
  const auto ts = ball_grid(static_cast<std::size_t>(n), R, grid);
  LipschitzReport rep;
  std::vector<double> p(static_cast<std::size_t>(m + n));
  for (const auto& x : xs)
    for (const auto& t : ts) {
      std::copy(x.begin(), x.end(), p.begin());
      std::copy(t.begin(), t.end(), p.begin() + m);
      for (int k = 0; k < m; ++k) {
        const Jet j = S.phi(k).jet(Point(p), 1);
        double g2 = 0.0;
        for (int l = 0; l < m; ++l) g2 += std::norm(j.coeff(static_cast<std::size_t>(1 + l)));
        rep.worst_ratio = std::max(rep.worst_ratio, std::sqrt(g2));
      }
    }
  rep.ok = rep.worst_ratio <= 0.5 + 1e-12;
  return rep;
}

FrameCoefficients dual_frame(const StructureMap& S, Point p) {
  const int m = S.m(), n = S.n();
  const auto z = S.Z_jets(p, 1);
  FrameCoefficients F;
  F.Zx.resize(m, m);
  F.Zt.resize(m, n);
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) F.Zx(k, l) = z[static_cast<std::size_t>(k)].coeff(static_cast<std::size_t>(1 + l));
    for (int j = 0; j < n; ++j) F.Zt(k, j) = z[static_cast<std::size_t>(k)].coeff(static_cast<std::size_t>(1 + m + j));
  }
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(F.Zx);
  if (!lu.isInvertible()) throw DegeneracyError("Z_x is singular: structure is not in normal form here");
  F.detZx = lu.determinant();
  F.Zx_inv = lu.inverse();
  return F;
}

namespace {

/// Gauss-Jordan inverse of a square matrix of jets, pivoting on the value.
std::vector<std::vector<Jet>> invert(std::vector<std::vector<Jet>> A) {
  const std::size_t m = A.size();
  const JetLayout* L = A[0][0].layout();
  std::vector<std::vector<Jet>> I(m, std::vector<Jet>(m, Jet(L, 0.0)));
  for (std::size_t i = 0; i < m; ++i) I[i][i] = Jet(L, 1.0);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::abs(A[r][c].value()) > std::abs(A[piv][c].value())) piv = r;
    if (std::abs(A[piv][c].value()) < 1e-14) throw DegeneracyError("Z_x is singular: structure is not in normal form here");
    std::swap(A[c], A[piv]);
    std::swap(I[c], I[piv]);
    const Jet inv = A[c][c].reciprocal();
    for (std::size_t k = 0; k < m; ++k) {
      A[c][k] = A[c][k] * inv;
      I[c][k] = I[c][k] * inv;
    }
    for (std::size_t r = 0; r < m; ++r) {
      if (r == c) continue;
      const Jet f = A[r][c];
      for (std::size_t k = 0; k < m; ++k) {
        A[r][k] -= f * A[c][k];
        I[r][k] -= f * I[c][k];
      }
    }
  }
  return I;
}

}  // namespace

FrameJets frame_jets(const StructureMap& S, Point p, int order) {
  const int m = S.m(), n = S.n();
  const auto z = S.Z_jets(p, order + 1);
  std::vector<std::vector<Jet>> Zx(static_cast<std::size_t>(m)), Zt(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) Zx[static_cast<std::size_t>(k)].push_back(z[static_cast<std::size_t>(k)].partial(l));
    for (int j = 0; j < n; ++j) Zt[static_cast<std::size_t>(k)].push_back(z[static_cast<std::size_t>(k)].partial(m + j));
  }
  const auto inv = invert(Zx);
  FrameJets F;
  F.order = order;
  const JetLayout* L = JetLayout::get(m + n, order);
  F.Mc.assign(static_cast<std::size_t>(m), std::vector<Jet>(static_cast<std::size_t>(m), Jet(L, 0.0)));
  F.Lc.assign(static_cast<std::size_t>(n), std::vector<Jet>(static_cast<std::size_t>(m), Jet(L, 0.0)));
  for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k)
    for (std::size_t l = 0; l < static_cast<std::size_t>(m); ++l) F.Mc[k][l] = inv[l][k];
  for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j)
    for (std::size_t l = 0; l < static_cast<std::size_t>(m); ++l)
      for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k) F.Lc[j][l] -= inv[l][k] * Zt[k][j];
  return F;
}

Jet apply_field(const FrameJets& F, const VectorField& X, const Jet& u, int m) {
  if (u.order() < 1) throw CapabilityError("applying a vector field needs a jet of order >= 1");
  const auto& coeffs = X.kind == VectorField::M ? F.Mc[static_cast<std::size_t>(X.index)]
                                                : F.Lc[static_cast<std::size_t>(X.index)];
  Jet out = X.kind == VectorField::L ? u.partial(m + X.index) : Jet(JetLayout::get(u.nvars(), u.order() - 1), 0.0);
  for (int l = 0; l < m; ++l) out += coeffs[static_cast<std::size_t>(l)] * u.partial(l);
  return out;
}

Jet apply_word(const FrameJets& F, const Word& word, const Jet& u, int m) {
  if (static_cast<int>(word.size()) > u.order()) throw CapabilityError("word longer than the jet order");
  if (F.order + 1 < u.order()) throw PreconditionError("frame jets too shallow for this jet");
  Jet v = u;
  for (auto it = word.rbegin(); it != word.rend(); ++it) v = apply_field(F, *it, v, m);
  return v;
}

Complex apply_vector_fields(const StructureMap& S, const SampledFunction& u, const Word& word, Point p) {
  const int k = static_cast<int>(word.size());
  if (u.max_order() < k) throw CapabilityError("u oracle depth below the word length");
  for (int c = 0; c < S.m(); ++c)
    if (S.phi(c).max_order() < k) throw CapabilityError("φ oracle depth below the word length");
  for (const auto& X : word)
    if (X.index < 0 || X.index >= (X.kind == VectorField::M ? S.m() : S.n()))
      throw ParameterError("vector field index out of range");
  if (k == 0) return u.value(p);
  const FrameJets F = frame_jets(S, p, k - 1);
  return apply_word(F, word, u.jet(p, k), S.m()).value();
}

double vector_field_seminorm(const StructureMap& S, const SampledFunction& u, const GevreyParams& params,
                             const Box& K, int grid) {
  params.validate();
  const int cap = params.order_cap, m = S.m(), N = S.N();
  if (u.max_order() < cap) throw CapabilityError("u oracle depth below order_cap");
  if (!u.domain().contains(K)) throw DomainError("vector_field_seminorm: K exceeds the domain of u");
  const auto alphas = indices_up_to(static_cast<std::size_t>(N), cap);
  double best = 0.0;
  for (const auto& p : box_grid(K, grid)) {
    const FrameJets F = frame_jets(S, Point(p), std::max(cap - 1, 0));
    const Jet uj = u.jet(Point(p), cap);
    for (const auto& a : alphas) {
      Word w;
      for (int i = 0; i < N; ++i)
        for (int r = 0; r < a[static_cast<std::size_t>(i)]; ++r)
          w.push_back(i < m ? VectorField{VectorField::M, i} : VectorField{VectorField::L, i - m});
      const Complex v = w.empty() ? uj.value() : apply_word(F, w, uj, m).value();
      best = std::max(best, std::abs(v) / (std::pow(params.h, a.order()) * std::pow(factorial(a), params.s)));
    }
  }
  return best;
}

void DomainRadii::validate() const {
  if (!(R > 0)) throw ParameterError("R must be positive");
  if (!(T > 0) || T > R) throw ParameterError("T must lie in (0, R]");
  if (!(W_margin > 0)) throw ParameterError("W margin must be positive");
}

std::vector<std::vector<double>> U_grid(const StructureMap& S, const DomainRadii& radii, int per_axis) {
  const auto xs = ball_grid(static_cast<std::size_t>(S.m()), radii.R / 4, per_axis);
  const auto ts = ball_grid(static_cast<std::size_t>(S.n()), radii.T, per_axis);
  std::vector<std::vector<double>> out;
  for (const auto& t : ts)
    for (const auto& x : xs) {
      std::vector<double> p(x);
      p.insert(p.end(), t.begin(), t.end());
      out.push_back(std::move(p));
    }
  return out;
}

Jet jet_determinant(std::vector<std::vector<Jet>> A) {
  const std::size_t m = A.size();
  if (m == 1) return A[0][0];
  if (m == 2) return A[0][0] * A[1][1] - A[0][1] * A[1][0];
  Jet det(A[0][0].layout(), 1.0);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::abs(A[r][c].value()) > std::abs(A[piv][c].value())) piv = r;
    if (A[piv][c].value() == Complex{}) return Jet(A[0][0].layout(), 0.0);
    if (piv != c) {
      std::swap(A[c], A[piv]);
      det = -det;
    }
    det *= A[c][c];
    const Jet inv = A[c][c].reciprocal();
    for (std::size_t r = c + 1; r < m; ++r) {
      const Jet f = A[r][c] * inv;
      for (std::size_t k = c; k < m; ++k) A[r][k] -= f * A[c][k];
    }
  }
  return det;
}

Jet detZx_jet(const StructureMap& S, Point p, int order) {
  const auto z = S.Z_jets(p, order + 1);
  std::vector<std::vector<Jet>> Zx(static_cast<std::size_t>(S.m()));
  for (int k = 0; k < S.m(); ++k)
    for (int l = 0; l < S.m(); ++l) Zx[static_cast<std::size_t>(k)].push_back(z[static_cast<std::size_t>(k)].partial(l));
  return jet_determinant(std::move(Zx));
}

SlicePoint slice_point(const StructureMap& S, Point p) {
  const int m = S.m();
  const auto z = S.Z_jets(p, 1);
  SlicePoint out;
  for (const auto& zk : z) out.Z.push_back(zk.value());
  if (m == 1) {
    out.det = z[0].coeff(1);
  } else {
    Eigen::MatrixXcd A(m, m);
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l) A(k, l) = z[static_cast<std::size_t>(k)].coeff(static_cast<std::size_t>(1 + l));
    out.det = A.determinant();
  }
  return out;
}

double real_phase(std::span<const Complex> w) {
  double s = 0.0;
  for (Complex c : w) s += c.real() * c.real() - c.imag() * c.imag();
  return s;
}

FindTReport find_T(const StructureMap& S, double R, int grid) {
  if (!(R > 0)) throw ParameterError("find_T needs R > 0");
  if (grid < 8) throw ParameterError("find_T needs at least 8 grid points per axis");
  // 4k+1 points per axis put ±R/2 and ±R/4 on the grid.
  const int g = ((grid - 1 + 3) / 4) * 4 + 1;
  const std::size_t m = static_cast<std::size_t>(S.m()), n = static_cast<std::size_t>(S.n());
  const auto xs = ball_grid(m, R / 4, g);
  std::vector<std::vector<double>> ys;
  for (auto& y : box_grid(Box::cube(m, R), g)) {
    double q = 0.0;
    for (double v : y) q += v * v;
    if (q >= R * R / 4 * (1 - 1e-12) && q <= R * R * (1 + 1e-12)) ys.push_back(std::move(y));
  }
  const auto unit_t = ball_grid(n, 1.0, g);
  const double threshold = R * R / 33.0;

  auto Zs = [&](const std::vector<std::vector<double>>& base, double T) {
    std::vector<Complex> out;
    std::vector<double> p(m + n);
    for (const auto& b : base)
      for (const auto& s : unit_t) {
        std::copy(b.begin(), b.end(), p.begin());
        for (std::size_t j = 0; j < n; ++j) p[m + j] = T * s[j];
        for (Complex z : S.Z(Point(p))) out.push_back(z);
      }
    return out;
  };
  // Minimum of the phase; stops early once it drops below `stop`.
  auto min_phase = [&](double T, double stop) {
    const auto A = Zs(xs, T), B = Zs(ys, T);
    double best = std::numeric_limits<double>::infinity();
    std::vector<Complex> w(m);
    for (std::size_t a = 0; a < A.size(); a += m)
      for (std::size_t b = 0; b < B.size(); b += m) {
        for (std::size_t k = 0; k < m; ++k) w[k] = A[a + k] - B[b + k];
        best = std::min(best, real_phase(w));
        if (best < stop) return best;
      }
    return best;
  };

  if (!S.domain().contains(Box::cube(m + n, R))) throw DomainError("φ oracle is not defined on the sampled region");
  if (min_phase(R, threshold) >= threshold) return {R, min_phase(R, -1e300)};
  double lo = 0.0, hi = R;
  while (hi - lo > R / 100) {
    const double mid = 0.5 * (lo + hi);
    if (min_phase(mid, threshold) >= threshold)
      lo = mid;
    else
      hi = mid;
  }
  if (lo == 0.0) {
    const double worst = min_phase(hi, -1e300);
    throw InfeasibilityError("find_T: no positive T found; worst phase " + std::to_string(worst) + " < R^2/33 = " +
                             std::to_string(threshold));
  }
  return {lo, min_phase(lo, -1e300)};
}

}  // namespace btlab
