#include "avgmpc/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>

namespace avgmpc::expr {

ParseError::ParseError(const std::string& message, std::size_t position)
    : std::runtime_error("parse error at position " + std::to_string(position) + ": " + message),
      position_(position) {}

namespace {

enum class Tok { kNumber, kIdent, kPlus, kMinus, kStar, kSlash, kCaret, kLParen, kRParen, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::size_t pos = 0;
  std::string_view text;
  double number = 0.0;
  bool integral = false;  // literal written without '.' or exponent
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    Token t;
    t.pos = pos_;
    if (pos_ >= src_.size()) return t;

    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
        ++end;
      t.kind = Tok::kIdent;
      t.text = src_.substr(pos_, end - pos_);
      pos_ = end;
      return t;
    }
    ++pos_;
    switch (c) {
      case '+': t.kind = Tok::kPlus; break;
      case '-': t.kind = Tok::kMinus; break;
      case '*': t.kind = Tok::kStar; break;
      case '/': t.kind = Tok::kSlash; break;
      case '^': t.kind = Tok::kCaret; break;
      case '(': t.kind = Tok::kLParen; break;
      case ')': t.kind = Tok::kRParen; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", t.pos);
    }
    return t;
  }

 private:
  Token number() {
    Token t;
    t.kind = Tok::kNumber;
    t.pos = pos_;
    std::size_t end = pos_;
    bool integral = true;
    auto digits = [&] {
      std::size_t start = end;
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
      return end - start;
    };
    std::size_t count = digits();
    if (end < src_.size() && src_[end] == '.') {
      integral = false;
      ++end;
      count += digits();
    }
    if (count == 0) throw ParseError("malformed number", t.pos);
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t save = end;
      ++end;
      if (end < src_.size() && (src_[end] == '+' || src_[end] == '-')) ++end;
      if (digits() == 0) {
        end = save;  // "2e" is the number 2 followed by an identifier
      } else {
        integral = false;
      }
    }
    t.text = src_.substr(pos_, end - pos_);
    // strtod handles every form accepted above; from_chars for double is not
    // available on all supported toolchains.
    std::string buf(t.text);
    t.number = std::strtod(buf.c_str(), nullptr);
    t.integral = integral;
    pos_ = end;
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

class Parser {
 public:
  Parser(std::string_view src, int n, int m) : lex_(src), n_(n), m_(m) { advance(); }

  Expr run() {
    expression();
    if (tok_.kind != Tok::kEnd) throw ParseError("unexpected trailing input", tok_.pos);
    return Expr(std::move(nodes_), n_, m_);
  }

 private:
  void advance() { tok_ = lex_.next(); }

  int push(Node node) {
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(Op op, int lhs, int rhs) {
    Node node;
    node.op = op;
    node.lhs = lhs;
    node.rhs = rhs;
    return push(node);
  }

  int expression() {
    int lhs = term();
    while (tok_.kind == Tok::kPlus || tok_.kind == Tok::kMinus) {
      const Op op = tok_.kind == Tok::kPlus ? Op::kAdd : Op::kSub;
      advance();
      lhs = binary(op, lhs, term());
    }
    return lhs;
  }

  int term() {
    int lhs = unary();
    while (tok_.kind == Tok::kStar || tok_.kind == Tok::kSlash) {
      const Op op = tok_.kind == Tok::kStar ? Op::kMul : Op::kDiv;
      advance();
      lhs = binary(op, lhs, unary());
    }
    return lhs;
  }

  int unary() {
    if (tok_.kind == Tok::kMinus) {
      advance();
      Node node;
      node.op = Op::kNeg;
      node.lhs = unary();
      return push(node);
    }
    return power();
  }

  int power() {
    const int base = primary();
    if (tok_.kind != Tok::kCaret) return base;
    advance();
    Node node;
    node.op = Op::kPow;
    node.lhs = base;
    node.exponent = exponent_chain();
    return push(node);
  }

  // Right-associative chain of integer literals: 2^3^2 == 2^(3^2).
  unsigned exponent_chain() {
    if (tok_.kind != Tok::kNumber || !tok_.integral)
      throw ParseError("exponent must be a nonnegative integer literal", tok_.pos);
    const std::size_t pos = tok_.pos;
    const double base = tok_.number;
    advance();
    double value = base;
    if (tok_.kind == Tok::kCaret) {
      advance();
      value = std::pow(base, static_cast<double>(exponent_chain()));
    }
    if (value > 1024.0) throw ParseError("exponent too large", pos);
    return static_cast<unsigned>(value);
  }

  int primary() {
    switch (tok_.kind) {
      case Tok::kNumber: {
        Node node;
        node.op = Op::kConst;
        node.value = tok_.number;
        advance();
        return push(node);
      }
      case Tok::kIdent: return variable();
      case Tok::kLParen: {
        advance();
        const int inner = expression();
        if (tok_.kind != Tok::kRParen) throw ParseError("expected ')'", tok_.pos);
        advance();
        return inner;
      }
      case Tok::kEnd: throw ParseError("unexpected end of input", tok_.pos);
      default: throw ParseError("expected a number, variable or '('", tok_.pos);
    }
  }

  int variable() {
    const std::string_view name = tok_.text;
    const std::size_t pos = tok_.pos;
    auto unknown = [&] { return ParseError("unknown identifier '" + std::string(name) + "'", pos); };
    if (name.size() < 2 || (name[0] != 'x' && name[0] != 'u')) throw unknown();
    int index = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
    if (ec != std::errc() || ptr != name.data() + name.size() || name[1] == '0') throw unknown();
    const int limit = name[0] == 'x' ? n_ : m_;
    if (index < 1 || index > limit) throw unknown();
    Node node;
    node.op = name[0] == 'x' ? Op::kState : Op::kInput;
    node.index = index - 1;
    advance();
    return push(node);
  }

  Lexer lex_;
  Token tok_;
  int n_;
  int m_;
  std::vector<Node> nodes_;
};

Expr Expr::parse(std::string_view source, int n, int m) {
  if (n < 0 || m < 0) throw ConfigError("expression dimensions must be nonnegative");
  return Parser(source, n, m).run();
}

namespace {

double ipow(double base, unsigned e) {
  double result = 1.0;
  while (e > 0) {
    if (e & 1u) result *= base;
    base *= base;
    e >>= 1u;
  }
  return result;
}

void check_dims(const Expr& e, const Vector& x, const Vector& u) {
  if (x.size() != e.state_dim() || u.size() != e.input_dim())
    throw DomainError("expression evaluated with mismatched dimensions");
}

}  // namespace

double Expr::eval(const Vector& x, const Vector& u) const {
  check_dims(*this, x, u);
  std::vector<double> v(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    switch (nd.op) {
      case Op::kConst: v[i] = nd.value; break;
      case Op::kState: v[i] = x[nd.index]; break;
      case Op::kInput: v[i] = u[nd.index]; break;
      case Op::kNeg: v[i] = -v[nd.lhs]; break;
      case Op::kAdd: v[i] = v[nd.lhs] + v[nd.rhs]; break;
      case Op::kSub: v[i] = v[nd.lhs] - v[nd.rhs]; break;
      case Op::kMul: v[i] = v[nd.lhs] * v[nd.rhs]; break;
      case Op::kDiv:
        if (v[nd.rhs] == 0.0) throw EvalError("division by zero");
        v[i] = v[nd.lhs] / v[nd.rhs];
        break;
      case Op::kPow: v[i] = ipow(v[nd.lhs], nd.exponent); break;
    }
  }
  return v.back();
}

double Expr::eval_grad(const Vector& x, const Vector& u, Eigen::Ref<Vector> grad) const {
  check_dims(*this, x, u);
  const Eigen::Index nv = n_ + m_;
  if (grad.size() != nv) throw DomainError("gradient buffer has wrong size");

  // One dual number (value + tangent block) per node.
  std::vector<double> v(nodes_.size());
  Matrix d = Matrix::Zero(nv, static_cast<Eigen::Index>(nodes_.size()));
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    const auto col = static_cast<Eigen::Index>(i);
    switch (nd.op) {
      case Op::kConst: v[i] = nd.value; break;
      case Op::kState:
        v[i] = x[nd.index];
        d(nd.index, col) = 1.0;
        break;
      case Op::kInput:
        v[i] = u[nd.index];
        d(n_ + nd.index, col) = 1.0;
        break;
      case Op::kNeg:
        v[i] = -v[nd.lhs];
        d.col(col) = -d.col(nd.lhs);
        break;
      case Op::kAdd:
        v[i] = v[nd.lhs] + v[nd.rhs];
        d.col(col) = d.col(nd.lhs) + d.col(nd.rhs);
        break;
      case Op::kSub:
        v[i] = v[nd.lhs] - v[nd.rhs];
        d.col(col) = d.col(nd.lhs) - d.col(nd.rhs);
        break;
      case Op::kMul:
        v[i] = v[nd.lhs] * v[nd.rhs];
        d.col(col) = v[nd.rhs] * d.col(nd.lhs) + v[nd.lhs] * d.col(nd.rhs);
        break;
      case Op::kDiv: {
        const double den = v[nd.rhs];
        if (den == 0.0) throw EvalError("division by zero");
        v[i] = v[nd.lhs] / den;
        d.col(col) = (d.col(nd.lhs) - v[i] * d.col(nd.rhs)) / den;
        break;
      }
      case Op::kPow: {
        const double b = v[nd.lhs];
        v[i] = ipow(b, nd.exponent);
        if (nd.exponent > 0)
          d.col(col) = (nd.exponent * ipow(b, nd.exponent - 1)) * d.col(nd.lhs);
        break;
      }
    }
  }
  grad = d.col(d.cols() - 1);
  return v.back();
}

ValueGrad Expr::eval_grad(const Vector& x, const Vector& u) const {
  ValueGrad out;
  out.grad.resize(n_ + m_);
  out.value = eval_grad(x, u, out.grad);
  return out;
}

std::string Expr::to_string() const {
  std::function<std::string(int)> rec = [&](int i) -> std::string {
    const Node& nd = nodes_[static_cast<std::size_t>(i)];
    switch (nd.op) {
      case Op::kConst: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", nd.value);
        return buf;
      }
      case Op::kState: return "x" + std::to_string(nd.index + 1);
      case Op::kInput: return "u" + std::to_string(nd.index + 1);
      case Op::kNeg: return "(-" + rec(nd.lhs) + ")";
      case Op::kPow: return "(" + rec(nd.lhs) + "^" + std::to_string(nd.exponent) + ")";
      case Op::kAdd: return "(" + rec(nd.lhs) + "+" + rec(nd.rhs) + ")";
      case Op::kSub: return "(" + rec(nd.lhs) + "-" + rec(nd.rhs) + ")";
      case Op::kMul: return "(" + rec(nd.lhs) + "*" + rec(nd.rhs) + ")";
      case Op::kDiv: return "(" + rec(nd.lhs) + "/" + rec(nd.rhs) + ")";
    }
    return {};
  };
  return nodes_.empty() ? std::string() : rec(static_cast<int>(nodes_.size()) - 1);
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.n_ != b.n_ || a.m_ != b.m_) return false;
  if (a.nodes_.empty() || b.nodes_.empty()) return a.nodes_.empty() && b.nodes_.empty();
  std::function<bool(int, int)> same = [&](int i, int j) {
    const Node& x = a.nodes_[static_cast<std::size_t>(i)];
    const Node& y = b.nodes_[static_cast<std::size_t>(j)];
    if (x.op != y.op) return false;
    switch (x.op) {
      case Op::kConst: return x.value == y.value;
      case Op::kState:
      case Op::kInput: return x.index == y.index;
      case Op::kNeg: return same(x.lhs, y.lhs);
      case Op::kPow: return x.exponent == y.exponent && same(x.lhs, y.lhs);
      default: return same(x.lhs, y.lhs) && same(x.rhs, y.rhs);
    }
  };
  return same(static_cast<int>(a.nodes_.size()) - 1, static_cast<int>(b.nodes_.size()) - 1);
}

}  // namespace avgmpc::expr
