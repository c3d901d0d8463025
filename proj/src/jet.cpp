#include "btlab/jet.hpp"

#include "btlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace btlab {

JetLayout::JetLayout(int nvars, int order) : nvars_(nvars), order_(order) {
  index_ = indices_up_to(static_cast<std::size_t>(nvars), order);
  prefix_.assign(static_cast<std::size_t>(order) + 1, 0);
  for (const auto& a : index_)
    for (int k = a.order(); k <= order; ++k) ++prefix_[static_cast<std::size_t>(k)];

  lookup_.reserve(index_.size());
  for (std::uint32_t i = 0; i < index_.size(); ++i) lookup_.emplace_back(key(index_[i]), i);
  std::sort(lookup_.begin(), lookup_.end());

  for (std::uint32_t i = 0; i < index_.size(); ++i)
    for (std::uint32_t j = 0; j < index_.size(); ++j)
      if (index_[i].order() + index_[j].order() <= order)
        products_.push_back({i, j, static_cast<std::uint32_t>(position(index_[i] + index_[j]))});

  deriv_.resize(static_cast<std::size_t>(nvars));
  if (order > 0) {
    for (int v = 0; v < nvars; ++v) {
      for (std::uint32_t t = 0; t < prefix_[static_cast<std::size_t>(order) - 1]; ++t) {
        MultiIndex src = index_[t];
        src[static_cast<std::size_t>(v)] += 1;
        deriv_[static_cast<std::size_t>(v)].push_back(
            {t, static_cast<std::uint32_t>(position(src)),
             static_cast<double>(src[static_cast<std::size_t>(v)])});
      }
    }
  }
}

std::uint64_t JetLayout::key(const MultiIndex& a) const {
  std::uint64_t k = 0;
  for (int v : a.entries()) k = k * static_cast<std::uint64_t>(order_ + 1) + static_cast<std::uint64_t>(v);
  return k;
}

std::size_t JetLayout::position(const MultiIndex& a) const {
  if (static_cast<int>(a.dim()) != nvars_ || a.order() > order_)
    throw PreconditionError("multi-index " + a.to_string() + " outside jet layout");
  auto k = key(a);
  auto it = std::lower_bound(lookup_.begin(), lookup_.end(), std::make_pair(k, std::uint32_t{0}));
  return it->second;
}

const JetLayout* JetLayout::get(int nvars, int order) {
  if (nvars < 0 || order < 0) throw ParameterError("jet layout needs nvars >= 0 and order >= 0");
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> registry;
  std::lock_guard lock(mu);
  auto& slot = registry[{nvars, order}];
  if (!slot) slot.reset(new JetLayout(nvars, order));
  return slot.get();
}

Jet::Jet(const JetLayout* layout, Complex c0) : layout_(layout), c_(layout->size(), Complex{}) {
  c_[0] = c0;
}

Jet Jet::variable(const JetLayout* layout, int v, Complex value) {
  Jet j(layout, value);
  if (layout->order() >= 1)
    j.c_[layout->position(MultiIndex::unit(static_cast<std::size_t>(layout->nvars()),
                                           static_cast<std::size_t>(v)))] = 1.0;
  return j;
}

Complex Jet::taylor(const MultiIndex& a) const {
  if (a.order() > order()) return 0.0;
  return c_[layout_->position(a)];
}

Complex Jet::derivative(const MultiIndex& a) const {
  if (a.order() > order())
    throw CapabilityError("jet of order " + std::to_string(order()) + " cannot supply derivative " +
                          a.to_string());
  return c_[layout_->position(a)] * factorial(a);
}

void Jet::set_derivative(const MultiIndex& a, Complex d) { c_[layout_->position(a)] = d / factorial(a); }

Jet Jet::truncated(int k) const {
  if (k >= order()) return *this;
  Jet r(JetLayout::get(nvars(), k));
  std::copy_n(c_.begin(), r.c_.size(), r.c_.begin());
  return r;
}

Jet Jet::partial(int v) const {
  if (order() == 0) throw CapabilityError("cannot differentiate an order-0 jet");
  Jet r(JetLayout::get(nvars(), order() - 1));
  for (const auto& e : layout_->derivative(v)) r.c_[e.target] = e.factor * c_[e.source];
  return r;
}

namespace {

const JetLayout* common_layout(const Jet& a, const Jet& b) {
  if (a.layout() == b.layout()) return a.layout();
  if (a.nvars() != b.nvars()) throw PreconditionError("jet variable count mismatch");
  return a.order() < b.order() ? a.layout() : b.layout();
}

}  // namespace

Jet& Jet::operator+=(const Jet& o) {
  const JetLayout* L = common_layout(*this, o);
  if (L != layout_) *this = truncated(L->order());
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  const JetLayout* L = common_layout(*this, o);
  if (L != layout_) *this = truncated(L->order());
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(Complex s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Jet& Jet::operator*=(const Jet& o) {
  *this = *this * o;
  return *this;
}

Jet Jet::operator-() const {
  Jet r(*this);
  for (auto& v : r.c_) v = -v;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  const JetLayout* L = common_layout(a, b);
  Jet r(L);
  for (const auto& t : L->products()) r.c_[t.c] += a.c_[t.a] * b.c_[t.b];
  return r;
}

Jet Jet::compose_univariate(std::span<const Complex> derivs) const {
  const int K = order();
  if (static_cast<int>(derivs.size()) < K + 1)
    throw CapabilityError("univariate composition needs derivatives up to the jet order");
  Jet nil(*this);
  nil.c_[0] = 0.0;
  Jet r(layout_, derivs[static_cast<std::size_t>(K)] / factorial(K));
  for (int k = K - 1; k >= 0; --k) {
    r = r * nil;
    r.c_[0] += derivs[static_cast<std::size_t>(k)] / factorial(k);
  }
  return r;
}

Jet Jet::reciprocal() const {
  const Complex c0 = c_[0];
  if (c0 == Complex{}) throw NumericError("jet reciprocal of a function vanishing at the point");
  std::vector<Complex> d(static_cast<std::size_t>(order()) + 1);
  Complex p = 1.0 / c0;
  for (int k = 0; k <= order(); ++k) {
    d[static_cast<std::size_t>(k)] = p * ((k % 2) ? -1.0 : 1.0) * factorial(k);
    p /= c0;
  }
  return compose_univariate(d);
}

Jet exp(const Jet& a) {
  std::vector<Complex> d(static_cast<std::size_t>(a.order()) + 1, std::exp(a.value()));
  return a.compose_univariate(d);
}

Jet sin(const Jet& a) {
  std::vector<Complex> d(static_cast<std::size_t>(a.order()) + 1);
  const Complex s = std::sin(a.value()), c = std::cos(a.value());
  const Complex cyc[4] = {s, c, -s, -c};
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = cyc[k % 4];
  return a.compose_univariate(d);
}

Jet cos(const Jet& a) {
  std::vector<Complex> d(static_cast<std::size_t>(a.order()) + 1);
  const Complex s = std::sin(a.value()), c = std::cos(a.value());
  const Complex cyc[4] = {c, -s, -c, s};
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = cyc[k % 4];
  return a.compose_univariate(d);
}

Jet pow(const Jet& a, double p) {
  const Complex c0 = a.value();
  if (c0 == Complex{} && a.order() > 0) throw NumericError("non-integer power of a jet vanishing at the point");
  std::vector<Complex> d(static_cast<std::size_t>(a.order()) + 1);
  double coef = 1.0;
  for (int k = 0; k <= a.order(); ++k) {
    d[static_cast<std::size_t>(k)] = coef * std::pow(c0, p - k);
    coef *= (p - k);
  }
  return a.compose_univariate(d);
}

Jet sqrt(const Jet& a) { return pow(a, 0.5); }

Jet pow(const Jet& a, int n) {
  if (n < 0) return pow(a, -n).reciprocal();
  Jet result(a.layout(), 1.0);
  Jet base(a);
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return result;
}

Jet compose(const Jet& outer, std::span<const Jet> inner) {
  if (inner.empty() || static_cast<int>(inner.size()) != outer.nvars())
    throw PreconditionError("compose needs one inner jet per outer variable");
  const JetLayout* L = inner[0].layout();
  for (const auto& j : inner) L = common_layout(j, Jet(L));
  std::vector<Jet> nil;
  nil.reserve(inner.size());
  for (const auto& j : inner) {
    Jet n = j.truncated(L->order());
    n.coeff(0) = 0.0;
    nil.push_back(n);
  }
  // Powers of each nilpotent part, reused across monomials.
  const int K = std::min(outer.order(), L->order());
  std::vector<std::vector<Jet>> powers(inner.size());
  for (std::size_t v = 0; v < inner.size(); ++v) {
    powers[v].emplace_back(L, 1.0);
    for (int k = 1; k <= K; ++k) powers[v].push_back(powers[v].back() * nil[v]);
  }
  Jet r(L);
  const JetLayout* OL = outer.layout();
  for (std::size_t i = 0; i < OL->size(); ++i) {
    const MultiIndex& a = OL->index(i);
    if (a.order() > K || outer.coeff(i) == Complex{}) continue;
    Jet term(L, outer.coeff(i));
    for (std::size_t v = 0; v < inner.size(); ++v)
      if (a[v]) term = term * powers[v][static_cast<std::size_t>(a[v])];
    r += term;
  }
  return r;
}

Jet remap(const Jet& a, const JetLayout* target, std::span<const int> var_map) {
  if (static_cast<int>(var_map.size()) != a.nvars()) throw PreconditionError("remap variable map size");
  Jet r(target);
  const JetLayout* L = a.layout();
  for (std::size_t i = 0; i < L->size(); ++i) {
    const MultiIndex& idx = L->index(i);
    if (idx.order() > target->order()) continue;
    MultiIndex t(static_cast<std::size_t>(target->nvars()));
    bool keep = true;
    for (std::size_t v = 0; v < idx.dim(); ++v) {
      if (!idx[v]) continue;
      if (var_map[v] < 0) {
        keep = false;
        break;
      }
      t[static_cast<std::size_t>(var_map[v])] += idx[v];
    }
    if (keep) r.coeff(target->position(t)) += a.coeff(i);
  }
  return r;
}

}  // namespace btlab
