#pragma once

#include "btlab/jet.hpp"
#include "btlab/sampled_function.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace btlab {

/// Closed-form scalar expressions used by scenario files.
///
/// Grammar: + - * / ^ (constant exponent), unary minus, parentheses,
/// exp sin cos sqrt, numeric literals and the constants i and pi. Identifiers
/// are resolved through a symbol table to variable slots.
class Expression {
 public:
  using Symbols = std::map<std::string, int, std::less<>>;

  /// Throws ConfigError("column N: ...") on malformed input or unknown names.
  static Expression parse(std::string_view text, const Symbols& symbols);

  Complex eval(std::span<const Complex> vars) const;
  /// All variable jets must share one layout.
  Jet eval(std::span<const Jet> vars) const;

  bool uses(int slot) const;
  const std::string& text() const { return text_; }

 private:
  enum class Op : unsigned char { Const, Var, Add, Sub, Mul, Div, Neg, PowInt, PowReal, Exp, Sin, Cos, Sqrt };
  struct Node {
    Op op;
    int slot = 0;
    Complex c{};
  };
  friend class ExpressionParser;
  template <class T, class Lift>
  T run(std::span<const T> vars, Lift lift) const;

  std::string text_;
  std::vector<Node> program_;  // postfix
};

/// A function on R^dim given by an expression whose symbols index the coordinates.
SampledFunction expression_function(std::string_view text, const Expression::Symbols& symbols, std::size_t dim);

}  // namespace btlab
