#include "btlab/multi_index.hpp"

#include "btlab/errors.hpp"

#include <algorithm>
#include <numeric>

namespace btlab {

MultiIndex::MultiIndex(std::initializer_list<int> entries) : e_(entries) {
  for (int v : e_)
    if (v < 0) throw ParameterError("multi-index entries must be nonnegative");
}

MultiIndex::MultiIndex(std::vector<int> entries) : e_(std::move(entries)) {
  for (int v : e_)
    if (v < 0) throw ParameterError("multi-index entries must be nonnegative");
}

MultiIndex MultiIndex::unit(std::size_t dim, std::size_t i) {
  MultiIndex a(dim);
  a.e_.at(i) = 1;
  return a;
}

int MultiIndex::order() const { return std::accumulate(e_.begin(), e_.end(), 0); }

bool MultiIndex::leq(const MultiIndex& other) const {
  if (other.dim() != dim()) return false;
  for (std::size_t i = 0; i < e_.size(); ++i)
    if (e_[i] > other.e_[i]) return false;
  return true;
}

MultiIndex MultiIndex::operator+(const MultiIndex& o) const {
  if (o.dim() != dim()) throw PreconditionError("multi-index dimension mismatch");
  MultiIndex r(*this);
  for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] += o.e_[i];
  return r;
}

MultiIndex MultiIndex::operator-(const MultiIndex& o) const {
  if (!o.leq(*this)) throw PreconditionError("multi-index subtraction below zero");
  MultiIndex r(*this);
  for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] -= o.e_[i];
  return r;
}

MultiIndex MultiIndex::scaled(int k) const {
  MultiIndex r(*this);
  for (int& v : r.e_) v *= k;
  return r;
}

std::string MultiIndex::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < e_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(e_[i]);
  }
  return s + ")";
}

BigInt factorial_big(int n) {
  BigInt r = 1;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

BigInt factorial_big(const MultiIndex& a) {
  BigInt r = 1;
  for (int v : a.entries()) r *= factorial_big(v);
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

double factorial(const MultiIndex& a) {
  double r = 1.0;
  for (int v : a.entries()) r *= factorial(v);
  return r;
}

double binomial(const MultiIndex& a, const MultiIndex& b) {
  if (!b.leq(a)) return 0.0;
  double r = 1.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    int n = a[i], k = b[i];
    double c = 1.0;
    for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
    r *= c;
  }
  return r;
}

namespace {

void fill_order(std::size_t dim, int remaining, std::size_t pos, std::vector<int>& cur,
                std::vector<MultiIndex>& out) {
  if (pos + 1 == dim) {
    cur[pos] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    cur[pos] = v;
    fill_order(dim, remaining - v, pos + 1, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> indices_of_order(std::size_t dim, int order) {
  std::vector<MultiIndex> out;
  if (dim == 0) {
    if (order == 0) out.emplace_back(0);
    return out;
  }
  std::vector<int> cur(dim, 0);
  fill_order(dim, order, 0, cur, out);
  return out;
}

std::vector<MultiIndex> indices_up_to(std::size_t dim, int order) {
  std::vector<MultiIndex> out;
  for (int k = 0; k <= order; ++k) {
    auto level = indices_of_order(dim, k);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

std::vector<MultiIndex> lower_set(const MultiIndex& alpha) {
  std::vector<MultiIndex> out;
  std::vector<int> cur(alpha.dim(), 0);
  while (true) {
    out.emplace_back(cur);
    bool done = true;
    for (std::size_t i = alpha.dim(); i-- > 0;) {
      if (cur[i] < alpha[i]) {
        ++cur[i];
        std::fill(cur.begin() + static_cast<std::ptrdiff_t>(i) + 1, cur.end(), 0);
        done = false;
        break;
      }
    }
    if (done) return out;
  }
}

}  // namespace btlab
