#pragma once

#include "btlab/expression.hpp"
#include "btlab/sampled_function.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace btlab {

/// Z(x,t) = x + iφ(x,t) on R^m × R^n. Points are laid out as [x_1..x_m, t_1..t_n].
class StructureMap {
 public:
  StructureMap() = default;
  /// Checks φ(0,0) = 0 and d_xφ(0,0) = 0 to 1e-10; throws ParameterError otherwise.
  StructureMap(int m, int n, std::vector<SampledFunction> phi, std::string label);

  int m() const { return m_; }
  int n() const { return n_; }
  int N() const { return m_ + n_; }
  const std::string& label() const { return label_; }
  const SampledFunction& phi(int k) const { return phi_[static_cast<std::size_t>(k)]; }
  /// Intersection of the φ_k domains.
  Box domain() const;

  std::vector<Complex> Z(Point p) const;
  /// Jets of Z_1..Z_m at p in N variables.
  std::vector<Jet> Z_jets(Point p, int order) const;

 private:
  int m_ = 0, n_ = 0;
  std::vector<SampledFunction> phi_;
  std::string label_;
};

/// Symbol table x / x1.., t / t1.. (and Z / Z1.. when with_Z) for a structure's variables.
/// Slots: x_k -> k, t_j -> m + j, Z_k -> m + n + k.
Expression::Symbols structure_symbols(int m, int n, bool with_Z = false);

/// φ given by one expression per component over the structure symbols.
StructureMap structure_from_expressions(int m, int n, const std::vector<std::string>& phi, std::string label);

/// translation (φ = 0), mizohata (t²/2), shear (xt), cr2 (m=2, n=1), mizohata2 (m=1, n=2).
StructureMap builtin_structure(const std::string& name);
/// Translation structure of arbitrary size.
StructureMap translation_structure(int m, int n);

/// A function of (x, t, Z(x,t)) given by an expression; Z enters through its jets.
SampledFunction structure_function(const StructureMap& S, const std::string& expr);

struct LipschitzReport {
  bool ok = false;
  double worst_ratio = 0.0;
};

/// Sampled max_k sup |∇_x φ_k| on V̄ = B̄_R × B̄_R; ok iff it is at most 1/2.
LipschitzReport validate_lipschitz(const StructureMap& S, double R, int grid_points_per_axis = 17);

struct FrameCoefficients {
  Eigen::MatrixXcd Zx, Zx_inv, Zt;
  Complex detZx;
};

/// Z_x, Z_x^{-1}, Z_t and det Z_x at a point. Singular Z_x throws DegeneracyError.
FrameCoefficients dual_frame(const StructureMap& S, Point p);

/// Coefficient jets of the frame: M_k = Σ_l Mc[k][l] ∂_{x_l}, L_j = ∂_{t_j} + Σ_l Lc[j][l] ∂_{x_l}.
struct FrameJets {
  std::vector<std::vector<Jet>> Mc, Lc;
  int order = 0;
};
FrameJets frame_jets(const StructureMap& S, Point p, int order);

struct VectorField {
  enum Kind : unsigned char { M, L } kind;
  int index;
  bool operator==(const VectorField&) const = default;
};
using Word = std::vector<VectorField>;

/// Applies one field to a jet; the result has one order less.
Jet apply_field(const FrameJets& F, const VectorField& X, const Jet& u, int m);
/// X_1 X_2 … X_k u with the rightmost field applied first; returns a jet of order u.order() - k.
Jet apply_word(const FrameJets& F, const Word& word, const Jet& u, int m);

/// The value of the word applied to u at p. Throws CapabilityError if u or φ lack depth.
Complex apply_vector_fields(const StructureMap& S, const SampledFunction& u, const Word& word, Point p);

/// max over |α| <= cap and grid points in K of |M^a L^b u| / (h^{|α|} α!^s), α = (a, b).
double vector_field_seminorm(const StructureMap& S, const SampledFunction& u, const GevreyParams& params,
                             const Box& K, int grid_points_per_axis = 9);

struct FindTReport {
  double T = 0.0;
  double min_phase = 0.0;  // sampled min of Re⟨Z(x,t)-Z(y,t')⟩² at T
};

/// Largest sampled T <= R with Re⟨Z(x,t)-Z(y,t')⟩² >= R²/33 for |x| <= R/4, R/2 <= |y| <= R,
/// |t|, |t'| <= T. Bisection tolerance R/100. Throws InfeasibilityError if none is found.
FindTReport find_T(const StructureMap& S, double R, int grid_points_per_axis = 17);

/// V = B_R × B_R, U = B_{R/4} × B_T, W = V enlarged by W_margin.
struct DomainRadii {
  double R = 0.4;
  double T = 0.4;
  double W_margin = 0.1;
  void validate() const;
};

/// Box grid on [-R/4, R/4]^m × [-T, T]^n filtered to U.
std::vector<std::vector<double>> U_grid(const StructureMap& S, const DomainRadii& radii, int per_axis = 17);

/// Determinant of a square matrix of jets (elimination with pivoting on the value).
Jet jet_determinant(std::vector<std::vector<Jet>> A);

/// Jets of det Z_x at p in N variables.
Jet detZx_jet(const StructureMap& S, Point p, int order);

/// Z(p) and det Z_x(p) from one first-order jet evaluation.
struct SlicePoint {
  std::vector<Complex> Z;
  Complex det;
};
SlicePoint slice_point(const StructureMap& S, Point p);

/// Re⟨w⟩² = Σ (Re w_k)² - (Im w_k)².
double real_phase(std::span<const Complex> w);

}  // namespace btlab
