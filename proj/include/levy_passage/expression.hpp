#pragma once

// Small expression language for user-supplied tail functions.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | 'x' | 'ln' '(' expr ')' | 'exp' '(' expr ')'
//            | 'pow' '(' expr ',' expr ')' | '(' expr ')'
//
// A tail is a list of pieces (until, expr): on [previous until, until) the
// tail equals expr(x); beyond the last `until` the tail is zero.

#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "error.hpp"

namespace levy_passage {

class ExpressionError : public Error {
 public:
  ExpressionError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class Expression {
 public:
  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Expression e;
    e.root_ = p.expr();
    p.skip();
    if (p.pos != text.size()) throw ExpressionError("unexpected trailing input", p.pos);
    e.text_ = text;
    return e;
  }

  double operator()(double x) const { return eval(*root_, x); }
  const std::string& text() const { return text_; }

 private:
  enum class Op { Num, Var, Add, Sub, Mul, Div, Neg, Ln, Exp, Pow };
  struct Node {
    Op op;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static double eval(const Node& n, double x) {
    switch (n.op) {
      case Op::Num: return n.value;
      case Op::Var: return x;
      case Op::Add: return eval(*n.a, x) + eval(*n.b, x);
      case Op::Sub: return eval(*n.a, x) - eval(*n.b, x);
      case Op::Mul: return eval(*n.a, x) * eval(*n.b, x);
      case Op::Div: return eval(*n.a, x) / eval(*n.b, x);
      case Op::Neg: return -eval(*n.a, x);
      case Op::Ln: return std::log(eval(*n.a, x));
      case Op::Exp: return std::exp(eval(*n.a, x));
      case Op::Pow: return std::pow(eval(*n.a, x), eval(*n.b, x));
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  static NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
    return std::make_shared<const Node>(Node{op, v, std::move(a), std::move(b)});
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!accept(c)) throw ExpressionError(std::string("expected '") + c + "'", pos);
    }
    NodePtr expr() {
      NodePtr lhs = term();
      for (;;) {
        if (accept('+'))
          lhs = make(Op::Add, lhs, term());
        else if (accept('-'))
          lhs = make(Op::Sub, lhs, term());
        else
          return lhs;
      }
    }
    NodePtr term() {
      NodePtr lhs = unary();
      for (;;) {
        if (accept('*'))
          lhs = make(Op::Mul, lhs, unary());
        else if (accept('/'))
          lhs = make(Op::Div, lhs, unary());
        else
          return lhs;
      }
    }
    NodePtr unary() {
      if (accept('-')) return make(Op::Neg, unary());
      return primary();
    }
    NodePtr primary() {
      skip();
      if (pos >= s.size()) throw ExpressionError("unexpected end of expression", pos);
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
          throw ExpressionError("malformed number", pos);
        }
        pos += used;
        return make(Op::Num, nullptr, nullptr, v);
      }
      if (accept('(')) {
        NodePtr e = expr();
        expect(')');
        return e;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string name = s.substr(start, pos - start);
        if (name == "x") return make(Op::Var);
        if (name == "ln" || name == "exp") {
          expect('(');
          NodePtr a = expr();
          expect(')');
          return make(name == "ln" ? Op::Ln : Op::Exp, a);
        }
        if (name == "pow") {
          expect('(');
          NodePtr a = expr();
          expect(',');
          NodePtr b = expr();
          expect(')');
          return make(Op::Pow, a, b);
        }
        throw ExpressionError("unknown identifier '" + name + "'", start);
      }
      throw ExpressionError(std::string("unexpected character '") + c + "'", pos);
    }
  };

  NodePtr root_;
  std::string text_;
};

/// Piecewise tail function built from expressions.
class PiecewiseTail {
 public:
  struct Piece {
    double until;
    Expression expr;
  };

  PiecewiseTail() = default;
  explicit PiecewiseTail(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    for (std::size_t i = 1; i < pieces_.size(); ++i)
      if (!(pieces_[i].until > pieces_[i - 1].until))
        throw PreconditionError("tail pieces must have increasing 'until' bounds");
  }

  double operator()(double x) const {
    for (const auto& p : pieces_)
      if (x < p.until) return p.expr(x);
    return 0.0;
  }

  /// Value of the piece ending at the given breakpoint, i.e. the left limit.
  double left_limit(std::size_t piece_index) const {
    const auto& p = pieces_.at(piece_index);
    return p.expr(p.until);
  }

  const std::vector<Piece>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }
  double support_end() const { return pieces_.empty() ? 0.0 : pieces_.back().until; }

 private:
  std::vector<Piece> pieces_;
};

}  // namespace levy_passage
