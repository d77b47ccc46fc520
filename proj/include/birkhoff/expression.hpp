#pragma once
// Small arithmetic expressions over chart coordinates, used wherever a
// configuration file supplies a formula: metric entries (variables x1..x9)
// and sweepout components (additionally the loop parameters u, v).
//
// Grammar (recursive descent, longest-match lexing):
//   expr   := term (("+" | "-") term)*
//   term   := factor (("*" | "/") factor)*
//   factor := base ("^" integer)?
//   base   := number | "pi" | ident | "(" expr ")" | func "(" expr ")"
//   func   := "sin" | "cos" | "exp"
//   ident  := "x1".."x9" | "u" | "v"
//
// Printing is precedence-aware and round-trips: parsing the printed form of
// a tree yields an identical tree.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace birkhoff {

// Variable bindings for evaluation. x spans the chart coordinates x1..xn;
// u/v are only consulted by expressions parsed with allow_uv.
struct EvalContext {
  std::span<const double> x;
  double u = 0.0;
  double v = 0.0;
};

namespace detail {
inline double powi(double base, int e) {
  // exact repeated squaring; negative exponents via one final division
  bool neg = e < 0;
  unsigned long long k = neg ? -static_cast<long long>(e) : e;
  double acc = 1.0, p = base;
  while (k) {
    if (k & 1) acc *= p;
    p *= p;
    k >>= 1;
  }
  return neg ? 1.0 / acc : acc;
}
}  // namespace detail

class Expression {
 public:
  enum class Kind {
    number, pi, var, var_u, var_v,   // leaves
    add, sub, mul, div, pow,         // arithmetic (pow: integer exponent)
    sin, cos, exp                    // unary functions
  };

  Expression() : kind_(Kind::number), value_(0.0) {}

  static Expression number(double v) {
    Expression e;
    e.kind_ = Kind::number;
    e.value_ = v;
    return e;
  }
  static Expression pi() {
    Expression e;
    e.kind_ = Kind::pi;
    return e;
  }
  static Expression variable(int index) {  // 0-based: x1 has index 0
    Expression e;
    e.kind_ = Kind::var;
    e.var_ = index;
    return e;
  }
  static Expression make(Kind k, std::vector<Expression> kids, int exponent = 0) {
    Expression e;
    e.kind_ = k;
    e.kids_ = std::move(kids);
    e.exponent_ = exponent;
    return e;
  }

  Kind kind() const { return kind_; }
  int var_index() const { return var_; }

  double eval(const EvalContext& ctx) const {
    switch (kind_) {
      case Kind::number: return value_;
      case Kind::pi: return M_PI;
      case Kind::var:
        if (var_ >= static_cast<int>(ctx.x.size()))
          throw usage_error("expression refers to x" + std::to_string(var_ + 1) +
                            " but only " + std::to_string(ctx.x.size()) +
                            " coordinates were supplied");
        return ctx.x[var_];
      case Kind::var_u: return ctx.u;
      case Kind::var_v: return ctx.v;
      case Kind::add: return kids_[0].eval(ctx) + kids_[1].eval(ctx);
      case Kind::sub: return kids_[0].eval(ctx) - kids_[1].eval(ctx);
      case Kind::mul: return kids_[0].eval(ctx) * kids_[1].eval(ctx);
      case Kind::div: return kids_[0].eval(ctx) / kids_[1].eval(ctx);
      case Kind::pow: return detail::powi(kids_[0].eval(ctx), exponent_);
      case Kind::sin: return std::sin(kids_[0].eval(ctx));
      case Kind::cos: return std::cos(kids_[0].eval(ctx));
      case Kind::exp: return std::exp(kids_[0].eval(ctx));
    }
    return 0.0;  // unreachable
  }

  // Highest variable index referenced (x1 -> 1, ...); 0 if none.
  int max_variable() const {
    int m = kind_ == Kind::var ? var_ + 1 : 0;
    for (const auto& k : kids_) m = std::max(m, k.max_variable());
    return m;
  }
  bool uses_uv() const {
    if (kind_ == Kind::var_u || kind_ == Kind::var_v) return true;
    for (const auto& k : kids_)
      if (k.uses_uv()) return true;
    return false;
  }

  std::string to_string() const {
    std::string out;
    print(out, 0);
    return out;
  }

  friend bool operator==(const Expression& a, const Expression& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
      case Kind::number: return a.value_ == b.value_;
      case Kind::var: return a.var_ == b.var_;
      case Kind::pow:
        if (a.exponent_ != b.exponent_) return false;
        break;
      default: break;
    }
    return a.kids_ == b.kids_;
  }

 private:
  // precedence levels: 1 add/sub, 2 mul/div, 3 pow, 4 atoms
  int level() const {
    switch (kind_) {
      case Kind::add: case Kind::sub: return 1;
      case Kind::mul: case Kind::div: return 2;
      case Kind::pow: return 3;
      default: return 4;
    }
  }

  void print(std::string& out, int parent_level) const {
    const bool parens = level() < parent_level;
    if (parens) out += '(';
    switch (kind_) {
      case Kind::number: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", value_);
        out += buf;
        break;
      }
      case Kind::pi: out += "pi"; break;
      case Kind::var: out += 'x'; out += static_cast<char>('1' + var_); break;
      case Kind::var_u: out += 'u'; break;
      case Kind::var_v: out += 'v'; break;
      case Kind::add: case Kind::sub: {
        kids_[0].print(out, 1);
        out += kind_ == Kind::add ? '+' : '-';
        // right operand binds tighter: a-(b+c) keeps its parentheses
        kids_[1].print(out, 2);
        break;
      }
      case Kind::mul: case Kind::div: {
        kids_[0].print(out, 2);
        out += kind_ == Kind::mul ? '*' : '/';
        kids_[1].print(out, 3);
        break;
      }
      case Kind::pow: {
        kids_[0].print(out, 4);  // grammar only allows atomic bases
        out += '^';
        out += std::to_string(exponent_);
        break;
      }
      case Kind::sin: case Kind::cos: case Kind::exp: {
        out += kind_ == Kind::sin ? "sin" : kind_ == Kind::cos ? "cos" : "exp";
        out += '(';
        kids_[0].print(out, 0);
        out += ')';
        break;
      }
    }
    if (parens) out += ')';
  }

  Kind kind_;
  double value_ = 0.0;
  int var_ = 0;       // for Kind::var
  int exponent_ = 0;  // for Kind::pow
  std::vector<Expression> kids_;
};

namespace detail {

class ExprParser {
 public:
  ExprParser(std::string_view text, bool allow_uv)
      : text_(text), allow_uv_(allow_uv) {}

  Expression parse() {
    Expression e = expr();
    skip_ws();
    if (pos_ != text_.size())
      throw parse_error("trailing input after expression", pos_);
    return e;
  }

 private:
  Expression expr() {
    Expression left = term();
    for (;;) {
      skip_ws();
      if (peek() == '+' || peek() == '-') {
        char op = take();
        Expression right = term();
        left = Expression::make(
            op == '+' ? Expression::Kind::add : Expression::Kind::sub,
            {std::move(left), std::move(right)});
      } else {
        return left;
      }
    }
  }

  Expression term() {
    Expression left = factor();
    for (;;) {
      skip_ws();
      if (peek() == '*' || peek() == '/') {
        char op = take();
        Expression right = factor();
        left = Expression::make(
            op == '*' ? Expression::Kind::mul : Expression::Kind::div,
            {std::move(left), std::move(right)});
      } else {
        return left;
      }
    }
  }

  Expression factor() {
    Expression b = base();
    skip_ws();
    if (peek() == '^') {
      take();
      return Expression::make(Expression::Kind::pow, {std::move(b)}, integer());
    }
    return b;
  }

  Expression base() {
    skip_ws();
    char c = peek();
    if (c == '\0') throw parse_error("unexpected end of expression", pos_);
    if (c == '(') {
      take();
      Expression e = expr();
      skip_ws();
      if (peek() != ')') throw parse_error("expected ')'", pos_);
      take();
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    throw parse_error(std::string("unexpected character '") + c + "'", pos_);
  }

  Expression number() {
    std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) take();
    if (peek() == '.') {
      take();
      while (std::isdigit(static_cast<unsigned char>(peek()))) take();
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t mark = pos_;
      take();
      if (peek() == '+' || peek() == '-') take();
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        while (std::isdigit(static_cast<unsigned char>(peek()))) take();
      } else {
        pos_ = mark;  // not an exponent after all ("2e" would be "2","e")
      }
    }
    if (pos_ == start) throw parse_error("malformed number", start);
    return Expression::number(std::stod(std::string(text_.substr(start, pos_ - start))));
  }

  int integer() {
    skip_ws();
    std::size_t start = pos_;
    if (peek() == '-') take();
    if (!std::isdigit(static_cast<unsigned char>(peek())))
      throw parse_error("expected integer exponent after '^'", pos_);
    while (std::isdigit(static_cast<unsigned char>(peek()))) take();
    return std::stoi(std::string(text_.substr(start, pos_ - start)));
  }

  Expression ident() {
    std::size_t start = pos_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') take();
    std::string name(text_.substr(start, pos_ - start));
    if (name == "pi") return Expression::pi();
    if (name == "sin" || name == "cos" || name == "exp") {
      skip_ws();
      if (peek() != '(')
        throw parse_error("expected '(' after function '" + name + "'", pos_);
      take();
      Expression arg = expr();
      skip_ws();
      if (peek() != ')') throw parse_error("expected ')'", pos_);
      take();
      auto k = name == "sin" ? Expression::Kind::sin
             : name == "cos" ? Expression::Kind::cos
                             : Expression::Kind::exp;
      return Expression::make(k, {std::move(arg)});
    }
    if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9')
      return Expression::variable(name[1] - '1');
    if (allow_uv_ && (name == "u" || name == "v")) {
      return Expression::make(
          name == "u" ? Expression::Kind::var_u : Expression::Kind::var_v, {});
    }
    throw parse_error("unknown identifier '" + name + "'", start);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char take() { return text_[pos_++]; }

  std::string_view text_;
  bool allow_uv_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// allow_uv enables the loop-parameter variables u and v (sweepout components);
// metric entries must not reference them.
inline Expression parse_expression(std::string_view text, bool allow_uv = false) {
  return detail::ExprParser(text, allow_uv).parse();
}

}  // namespace birkhoff
