#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <string>

#include "jumpflow/errors.hpp"

namespace jumpflow {

/// Minimal expression language for coefficient families: constants, the
/// variable x, + - *, unary minus, sin, cos, exp, parentheses.  Expressions
/// are differentiated analytically, so the two derivatives a coefficient set
/// needs never come from the user.
class Expr {
 public:
  static Expr parse(const std::string& text);

  double eval(double x) const { return node_->eval(x); }
  Expr derivative() const { return Expr(node_->derive()); }
  std::string str() const { return node_->str(); }

  /// Callable view (copyable, cheap: shared AST).
  double operator()(double x) const { return eval(x); }

 private:
  struct Node {
    virtual ~Node() = default;
    virtual double eval(double x) const = 0;
    virtual std::shared_ptr<const Node> derive() const = 0;
    virtual std::string str() const = 0;
  };
  using P = std::shared_ptr<const Node>;

  struct Const : Node {
    double v;
    explicit Const(double v) : v(v) {}
    double eval(double) const override { return v; }
    P derive() const override { return std::make_shared<Const>(0.0); }
    std::string str() const override { return std::to_string(v); }
  };
  struct Var : Node {
    double eval(double x) const override { return x; }
    P derive() const override { return std::make_shared<Const>(1.0); }
    std::string str() const override { return "x"; }
  };
  struct Add : Node {
    P a, b;
    Add(P a, P b) : a(std::move(a)), b(std::move(b)) {}
    double eval(double x) const override { return a->eval(x) + b->eval(x); }
    P derive() const override { return std::make_shared<Add>(a->derive(), b->derive()); }
    std::string str() const override { return "(" + a->str() + " + " + b->str() + ")"; }
  };
  struct Sub : Node {
    P a, b;
    Sub(P a, P b) : a(std::move(a)), b(std::move(b)) {}
    double eval(double x) const override { return a->eval(x) - b->eval(x); }
    P derive() const override { return std::make_shared<Sub>(a->derive(), b->derive()); }
    std::string str() const override { return "(" + a->str() + " - " + b->str() + ")"; }
  };
  struct Mul : Node {
    P a, b;
    Mul(P a, P b) : a(std::move(a)), b(std::move(b)) {}
    double eval(double x) const override { return a->eval(x) * b->eval(x); }
    P derive() const override {
      return std::make_shared<Add>(std::make_shared<Mul>(a->derive(), b),
                                   std::make_shared<Mul>(a, b->derive()));
    }
    std::string str() const override { return "(" + a->str() + " * " + b->str() + ")"; }
  };
  struct Neg : Node {
    P a;
    explicit Neg(P a) : a(std::move(a)) {}
    double eval(double x) const override { return -a->eval(x); }
    P derive() const override { return std::make_shared<Neg>(a->derive()); }
    std::string str() const override { return "(-" + a->str() + ")"; }
  };
  struct Fun : Node {
    int kind;  // 0 sin, 1 cos, 2 exp
    P a;
    Fun(int k, P a) : kind(k), a(std::move(a)) {}
    double eval(double x) const override {
      const double v = a->eval(x);
      switch (kind) {
        case 0: return std::sin(v);
        case 1: return std::cos(v);
        default: return std::exp(v);
      }
    }
    P derive() const override {
      P inner = a->derive();
      switch (kind) {
        case 0: return std::make_shared<Mul>(std::make_shared<Fun>(1, a), inner);
        case 1:
          return std::make_shared<Neg>(
              std::make_shared<Mul>(std::make_shared<Fun>(0, a), inner));
        default: return std::make_shared<Mul>(std::make_shared<Fun>(2, a), inner);
      }
    }
    std::string str() const override {
      static const char* names[] = {"sin", "cos", "exp"};
      return std::string(names[kind]) + "(" + a->str() + ")";
    }
  };

  struct Parser {
    const std::string& s;
    std::size_t i = 0;

    explicit Parser(const std::string& s) : s(s) {}

    void skip() {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool eat(char c) {
      skip();
      if (i < s.size() && s[i] == c) {
        ++i;
        return true;
      }
      return false;
    }

    P expr() {
      P a = term();
      for (;;) {
        if (eat('+'))
          a = std::make_shared<Add>(a, term());
        else if (eat('-'))
          a = std::make_shared<Sub>(a, term());
        else
          return a;
      }
    }

    P term() {
      P a = factor();
      for (;;) {
        skip();
        if (i < s.size() && s[i] == '*') {
          ++i;
          a = std::make_shared<Mul>(a, factor());
        } else {
          return a;
        }
      }
    }

    P factor() {
      skip();
      if (eat('-')) return std::make_shared<Neg>(factor());
      if (eat('(')) {
        P a = expr();
        if (!eat(')')) throw ConfigError("expected ')' in expression");
        return a;
      }
      if (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
        std::size_t j = i;
        while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.' ||
                                s[j] == 'e' || s[j] == 'E' ||
                                ((s[j] == '+' || s[j] == '-') && j > i &&
                                 (s[j - 1] == 'e' || s[j - 1] == 'E'))))
          ++j;
        const double v = std::stod(s.substr(i, j - i));
        i = j;
        return std::make_shared<Const>(v);
      }
      if (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) {
        std::size_t j = i;
        while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
        const std::string name = s.substr(i, j - i);
        i = j;
        if (name == "x") return std::make_shared<Var>();
        int kind = -1;
        if (name == "sin") kind = 0;
        if (name == "cos") kind = 1;
        if (name == "exp") kind = 2;
        if (kind < 0) throw ConfigError("unknown identifier '" + name + "' in expression");
        if (!eat('(')) throw ConfigError("expected '(' after " + name);
        P a = expr();
        if (!eat(')')) throw ConfigError("expected ')' after " + name + " argument");
        return std::make_shared<Fun>(kind, a);
      }
      throw ConfigError("unexpected character in expression at position " + std::to_string(i));
    }
  };

  explicit Expr(P node) : node_(std::move(node)) {}
  P node_;
};

inline Expr Expr::parse(const std::string& text) {
  Parser p(text);
  P root = p.expr();
  p.skip();
  if (p.i != text.size()) throw ConfigError("trailing characters in expression");
  return Expr(std::move(root));
}

}  // namespace jumpflow
