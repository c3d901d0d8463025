#include "btlab/expression.hpp"

#include "btlab/errors.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

namespace btlab {

class ExpressionParser {
 public:
  using Node = Expression::Node;
  using Op = Expression::Op;

  ExpressionParser(std::string_view text, const Expression::Symbols& symbols) : s_(text), symbols_(symbols) {}

  std::vector<Node> run() {
    std::vector<Node> out;
    expr(out);
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("column " + std::to_string(pos_ + 1) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expr(std::vector<Node>& out) {
    term(out);
    while (true) {
      if (accept('+')) {
        term(out);
        out.push_back({Op::Add});
      } else if (accept('-')) {
        term(out);
        out.push_back({Op::Sub});
      } else {
        return;
      }
    }
  }

  void term(std::vector<Node>& out) {
    unary(out);
    while (true) {
      if (accept('*')) {
        unary(out);
        out.push_back({Op::Mul});
      } else if (accept('/')) {
        unary(out);
        out.push_back({Op::Div});
      } else {
        return;
      }
    }
  }

  void unary(std::vector<Node>& out) {
    if (accept('-')) {
      unary(out);
      out.push_back({Op::Neg});
      return;
    }
    if (accept('+')) {
      unary(out);
      return;
    }
    power(out);
  }

  void power(std::vector<Node>& out) {
    primary(out);
    if (!accept('^')) return;
    const std::size_t at = pos_;
    std::vector<Node> exponent;
    unary(exponent);
    for (const auto& n : exponent)
      if (n.op == Op::Var) {
        pos_ = at;
        fail("exponent must be a constant");
      }
    Expression tmp;
    tmp.program_ = std::move(exponent);
    const Complex e = tmp.eval(std::span<const Complex>{});
    if (e.imag() != 0.0) {
      pos_ = at;
      fail("exponent must be real");
    }
    const double r = e.real();
    if (r == std::round(r) && std::abs(r) < 1e6)
      out.push_back({Op::PowInt, static_cast<int>(r)});
    else
      out.push_back({Op::PowReal, 0, Complex(r)});
  }

  void primary(std::vector<Node>& out) {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      expr(out);
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(std::string(s_.substr(pos_)), &used);
      } catch (const std::exception&) {
        fail("malformed number");
      }
      pos_ += used;
      out.push_back({Op::Const, 0, Complex(v)});
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string_view name = s_.substr(start, pos_ - start);
      static const std::map<std::string_view, Op> functions = {
          {"exp", Op::Exp}, {"sin", Op::Sin}, {"cos", Op::Cos}, {"sqrt", Op::Sqrt}};
      if (auto f = functions.find(name); f != functions.end()) {
        if (!accept('(')) fail("expected '(' after " + std::string(name));
        expr(out);
        if (!accept(')')) fail("expected ')'");
        out.push_back({f->second});
        return;
      }
      if (auto v = symbols_.find(name); v != symbols_.end()) {
        out.push_back({Op::Var, v->second});
        return;
      }
      if (name == "i") {
        out.push_back({Op::Const, 0, Complex(0, 1)});
        return;
      }
      if (name == "pi") {
        out.push_back({Op::Const, 0, Complex(std::numbers::pi)});
        return;
      }
      pos_ = start;
      fail("unknown name '" + std::string(name) + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  const Expression::Symbols& symbols_;
  std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text, const Symbols& symbols) {
  Expression e;
  e.text_ = std::string(text);
  e.program_ = ExpressionParser(text, symbols).run();
  return e;
}

namespace {

Complex ipow(Complex a, int n) { return std::pow(a, n); }
Jet ipow(const Jet& a, int n) { return pow(a, n); }
Complex rpow(Complex a, double p) { return std::pow(a, p); }
Jet rpow(const Jet& a, double p) { return pow(a, p); }
Complex fexp(Complex a) { return std::exp(a); }
Jet fexp(const Jet& a) { return exp(a); }
Complex fsin(Complex a) { return std::sin(a); }
Jet fsin(const Jet& a) { return sin(a); }
Complex fcos(Complex a) { return std::cos(a); }
Jet fcos(const Jet& a) { return cos(a); }
Complex fsqrt(Complex a) { return std::sqrt(a); }
Jet fsqrt(const Jet& a) { return sqrt(a); }

}  // namespace

template <class T, class Lift>
T Expression::run(std::span<const T> vars, Lift lift) const {
  std::vector<T> st;
  st.reserve(program_.size());
  auto pop = [&] {
    T v = std::move(st.back());
    st.pop_back();
    return v;
  };
  for (const auto& n : program_) {
    switch (n.op) {
      case Op::Const: st.push_back(lift(n.c)); break;
      case Op::Var:
        if (static_cast<std::size_t>(n.slot) >= vars.size()) throw PreconditionError("expression variable slot missing");
        st.push_back(vars[static_cast<std::size_t>(n.slot)]);
        break;
      case Op::Add: { T b = pop(); st.back() = st.back() + b; break; }
      case Op::Sub: { T b = pop(); st.back() = st.back() - b; break; }
      case Op::Mul: { T b = pop(); st.back() = st.back() * b; break; }
      case Op::Div: { T b = pop(); st.back() = st.back() / b; break; }
      case Op::Neg: st.back() = -st.back(); break;
      case Op::PowInt: st.back() = ipow(st.back(), n.slot); break;
      case Op::PowReal: st.back() = rpow(st.back(), n.c.real()); break;
      case Op::Exp: st.back() = fexp(st.back()); break;
      case Op::Sin: st.back() = fsin(st.back()); break;
      case Op::Cos: st.back() = fcos(st.back()); break;
      case Op::Sqrt: st.back() = fsqrt(st.back()); break;
    }
  }
  return st.back();
}

Complex Expression::eval(std::span<const Complex> vars) const {
  return run<Complex>(vars, [](Complex c) { return c; });
}

Jet Expression::eval(std::span<const Jet> vars) const {
  if (vars.empty()) throw PreconditionError("jet evaluation needs at least one variable jet");
  const JetLayout* L = vars[0].layout();
  return run<Jet>(vars, [L](Complex c) { return Jet(L, c); });
}

bool Expression::uses(int slot) const {
  for (const auto& n : program_)
    if (n.op == Op::Var && n.slot == slot) return true;
  return false;
}

SampledFunction expression_function(std::string_view text, const Expression::Symbols& symbols, std::size_t dim) {
  auto e = std::make_shared<const Expression>(Expression::parse(text, symbols));
  for (const auto& [name, slot] : symbols)
    if (slot < 0 || static_cast<std::size_t>(slot) >= dim)
      throw ConfigError("symbol '" + name + "' has no coordinate in dimension " + std::to_string(dim));
  auto value = [e](Point p) {
    std::vector<Complex> v(p.begin(), p.end());
    return e->eval(std::span<const Complex>(v));
  };
  auto jet = [e, dim](Point p, int order) {
    const JetLayout* L = JetLayout::get(static_cast<int>(dim), order);
    std::vector<Jet> v;
    for (std::size_t i = 0; i < dim; ++i) v.push_back(Jet::variable(L, static_cast<int>(i), p[i]));
    return e->eval(std::span<const Jet>(v));
  };
  return SampledFunction::from_jet(Box::unbounded(dim), jet, SampledFunction::kUnlimited, value);
}

}  // namespace btlab
