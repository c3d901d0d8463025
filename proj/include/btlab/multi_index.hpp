#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace btlab {

using BigInt = boost::multiprecision::cpp_int;

/// Nonnegative exponent vector. Ordering is lexicographic on the entries.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t dim) : e_(dim, 0) {}
  MultiIndex(std::initializer_list<int> entries);
  explicit MultiIndex(std::vector<int> entries);

  static MultiIndex unit(std::size_t dim, std::size_t i);

  std::size_t dim() const { return e_.size(); }
  int operator[](std::size_t i) const { return e_[i]; }
  int& operator[](std::size_t i) { return e_[i]; }
  const std::vector<int>& entries() const { return e_; }

  /// |α|
  int order() const;
  bool is_zero() const { return order() == 0; }
  /// Componentwise β <= α.
  bool leq(const MultiIndex& other) const;

  MultiIndex operator+(const MultiIndex& o) const;
  MultiIndex operator-(const MultiIndex& o) const;
  MultiIndex scaled(int k) const;

  std::string to_string() const;

  auto operator<=>(const MultiIndex&) const = default;
  bool operator==(const MultiIndex&) const = default;

 private:
  std::vector<int> e_;
};

BigInt factorial_big(int n);
/// α! = Π α_i!
BigInt factorial_big(const MultiIndex& a);
double factorial(int n);
double factorial(const MultiIndex& a);
/// Multi-index binomial (α choose β) = Π C(α_i, β_i).
double binomial(const MultiIndex& a, const MultiIndex& b);

/// All multi-indices of dimension `dim` with |α| <= order, graded then lexicographic descending
/// within each degree (x_1 first).
std::vector<MultiIndex> indices_up_to(std::size_t dim, int order);
/// All multi-indices of dimension `dim` with |α| == order.
std::vector<MultiIndex> indices_of_order(std::size_t dim, int order);
/// All β with β <= α, lexicographic.
std::vector<MultiIndex> lower_set(const MultiIndex& alpha);

}  // namespace btlab
