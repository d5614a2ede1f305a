#pragma once

// Arithmetic expressions over x1..xn, u1..um used to describe models in
// configuration files.
//
// Grammar (highest precedence first):
//   power   := primary ('^' INT)*          right associative, INT >= 0
//   unary   := '-' unary | power
//   term    := unary (('*' | '/') unary)*
//   expr    := term (('+' | '-') term)*
//   primary := NUMBER | IDENT | '(' expr ')'

#include "avgmpc/types.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace avgmpc::expr {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position);

  /// Zero-based offset into the source text.
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op { kConst, kState, kInput, kNeg, kAdd, kSub, kMul, kDiv, kPow };

struct Node {
  Op op = Op::kConst;
  double value = 0.0;     // kConst
  int index = 0;          // kState / kInput, zero-based
  unsigned exponent = 0;  // kPow
  int lhs = -1;
  int rhs = -1;
};

struct ValueGrad {
  double value = 0.0;
  Vector grad;  // [d/dx1..d/dxn, d/du1..d/dum]
};

class Expr {
 public:
  static Expr parse(std::string_view source, int n, int m);

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }

  double eval(const Vector& x, const Vector& u) const;

  /// Forward-mode dual evaluation. `grad` must have size n + m.
  double eval_grad(const Vector& x, const Vector& u, Eigen::Ref<Vector> grad) const;
  ValueGrad eval_grad(const Vector& x, const Vector& u) const;

  /// Fully parenthesized canonical form; parsing it yields an equal tree.
  std::string to_string() const;

  /// Structural equality of the syntax trees.
  friend bool operator==(const Expr& a, const Expr& b);

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  Expr(std::vector<Node> nodes, int n, int m) : nodes_(std::move(nodes)), n_(n), m_(m) {}

  // Children always precede their parent; the root is the last node.
  std::vector<Node> nodes_;
  int n_ = 0;
  int m_ = 0;

  friend class Parser;
};

}  // namespace avgmpc::expr
