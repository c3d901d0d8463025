#pragma once

/// Truncated multivariate Taylor polynomials with complex coefficients.
///
/// A Jet of order K in d variables stores c_α = ∂^α f(p) / α! for |α| <= K.
/// Arithmetic is truncated at K, so a Jet built from closed-form pieces carries
/// exact derivatives of the composite function at the expansion point.

#include "btlab/multi_index.hpp"

#include <boost/container/small_vector.hpp>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace btlab {

using Complex = std::complex<double>;

class JetLayout {
 public:
  struct Triple {
    std::uint32_t a, b, c;
  };
  struct DerivEntry {
    std::uint32_t target, source;
    double factor;
  };

  /// Shared immutable layout for (nvars, order). Thread-safe; pointers stay valid.
  static const JetLayout* get(int nvars, int order);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  std::size_t size() const { return index_.size(); }
  /// Number of coefficients with |α| <= k (a prefix of the layout).
  std::size_t size_of_order(int k) const { return prefix_[static_cast<std::size_t>(k)]; }
  const MultiIndex& index(std::size_t i) const { return index_[i]; }
  /// Position of α; throws PreconditionError if |α| exceeds the order.
  std::size_t position(const MultiIndex& a) const;
  /// Pairs with index_a + index_b = index_c, all within this order.
  const std::vector<Triple>& products() const { return products_; }
  /// ∂_v map from this layout into the layout of order-1.
  const std::vector<DerivEntry>& derivative(int v) const {
    return deriv_[static_cast<std::size_t>(v)];
  }

 private:
  JetLayout(int nvars, int order);
  std::uint64_t key(const MultiIndex& a) const;

  int nvars_;
  int order_;
  std::vector<MultiIndex> index_;
  std::vector<std::size_t> prefix_;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> lookup_;
  std::vector<Triple> products_;
  std::vector<std::vector<DerivEntry>> deriv_;
};

class Jet {
 public:
  using Storage = boost::container::small_vector<Complex, 10>;

  Jet() = default;
  explicit Jet(const JetLayout* layout, Complex c0 = 0.0);
  Jet(int nvars, int order, Complex c0 = 0.0) : Jet(JetLayout::get(nvars, order), c0) {}

  static Jet variable(const JetLayout* layout, int v, Complex value);

  const JetLayout* layout() const { return layout_; }
  int nvars() const { return layout_->nvars(); }
  int order() const { return layout_->order(); }
  std::size_t size() const { return c_.size(); }

  Complex value() const { return c_[0]; }
  Complex coeff(std::size_t i) const { return c_[i]; }
  Complex& coeff(std::size_t i) { return c_[i]; }
  /// Taylor coefficient c_α (zero if |α| exceeds the order).
  Complex taylor(const MultiIndex& a) const;
  /// ∂^α f at the expansion point.
  Complex derivative(const MultiIndex& a) const;
  void set_derivative(const MultiIndex& a, Complex d);

  Jet truncated(int order) const;
  /// ∂_v, one order lower.
  Jet partial(int v) const;
  /// f(c0 + N) = Σ_k f^{(k)}(c0)/k! N^k given derivs[k] = f^{(k)}(c0).
  Jet compose_univariate(std::span<const Complex> derivs) const;
  Jet reciprocal() const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator+=(Complex s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(Complex s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(Complex s);
  Jet& operator*=(const Jet& o);
  Jet operator-() const;

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, Complex s) { return a += s; }
  friend Jet operator+(Complex s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, Complex s) { return a -= s; }
  friend Jet operator-(Complex s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, Complex s) { return a *= s; }
  friend Jet operator*(Complex s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }
  friend Jet operator/(Jet a, Complex s) { return a *= (1.0 / s); }
  friend Jet operator/(Complex s, const Jet& a) { return a.reciprocal() *= s; }

 private:
  const JetLayout* layout_ = nullptr;
  Storage c_;
};

Jet exp(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet sqrt(const Jet& a);
Jet pow(const Jet& a, int n);
Jet pow(const Jet& a, double p);

/// Evaluates the Taylor polynomial `outer` (expanded at the values of `inner`)
/// on the jets `inner`, giving the jet of outer∘inner in the inner variables.
Jet compose(const Jet& outer, std::span<const Jet> inner);

/// Re-expresses `a` in `target`: source variable v maps to target variable var_map[v];
/// a negative entry drops every term depending on that variable.
Jet remap(const Jet& a, const JetLayout* target, std::span<const int> var_map);

}  // namespace btlab
