#include "avgmpc/acceptance.hpp"
#include "avgmpc/expr.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using avgmpc::Vector;
using avgmpc::expr::EvalError;
using avgmpc::expr::Expr;
using avgmpc::expr::ParseError;
using Catch::Approx;

namespace {
Vector v1(double a) { return Vector::Constant(1, a); }
}  // namespace

TEST_CASE("stage cost expression evaluates and differentiates") {
  const Expr e = Expr::parse("(x1-3)^2 + u1^2", 1, 1);
  CHECK(e.eval(v1(1), v1(1)) == 5.0);
  const auto vg = e.eval_grad(v1(1), v1(1));
  CHECK(vg.value == 5.0);
  CHECK(vg.grad[0] == -4.0);
  CHECK(vg.grad[1] == 2.0);
}

TEST_CASE("identity, constant and product expressions") {
  CHECK(Expr::parse("x1", 1, 0).eval(v1(7), Vector(0)) == 7.0);
  const auto c = Expr::parse("3", 1, 1).eval_grad(v1(0.3), v1(-2));
  CHECK(c.value == 3.0);
  CHECK(c.grad.isZero());
  const auto p = Expr::parse("x1*u1", 1, 1).eval_grad(v1(2), v1(1));
  CHECK(p.value == 2.0);
  CHECK(p.grad[0] == 1.0);
  CHECK(p.grad[1] == 2.0);
  CHECK(Expr::parse("2*x1 + u1 - 5", 1, 1).eval(v1(2), v1(1)) == 0.0);
}

TEST_CASE("precedence and associativity") {
  const Vector none(0);
  const Vector x = Vector::Constant(1, 2.0);
  CHECK(Expr::parse("2^3^2", 1, 0).eval(x, none) == 512.0);
  CHECK(Expr::parse("-x1^2", 1, 0).eval(x, none) == -4.0);
  CHECK(Expr::parse("(-x1)^2", 1, 0).eval(x, none) == 4.0);
  CHECK(Expr::parse("8/2/2", 1, 0).eval(x, none) == 2.0);
  CHECK(Expr::parse("8-2-2", 1, 0).eval(x, none) == 4.0);
  CHECK(Expr::parse("1+2*3", 1, 0).eval(x, none) == 7.0);
  CHECK(Expr::parse("x1^0", 1, 0).eval(x, none) == 1.0);
  CHECK(Expr::parse("1.5e1 - .5", 1, 0).eval(x, none) == 14.5);
}

TEST_CASE("parse errors carry a position") {
  try {
    Expr::parse("x1 + * 2", 1, 1);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
  CHECK_THROWS_AS(Expr::parse("x2", 1, 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("u1", 1, 0), ParseError);
  CHECK_THROWS_AS(Expr::parse("y1 + 1", 1, 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1^u1", 1, 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1^1.5", 1, 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1^-1", 1, 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("(x1", 1, 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("x1)", 1, 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("", 1, 1), ParseError);
  CHECK_THROWS_AS(Expr::parse("x01", 1, 1), ParseError);
}

TEST_CASE("division by zero is an evaluation error") {
  const Expr e = Expr::parse("1/(x1-2)", 1, 0);
  CHECK_THROWS_AS(e.eval(v1(2), Vector(0)), EvalError);
  Vector g(1);
  CHECK_THROWS_AS(e.eval_grad(v1(2), Vector(0), g), EvalError);
  CHECK(e.eval(v1(3), Vector(0)) == 1.0);
}

TEST_CASE("quotient rule") {
  const auto vg = Expr::parse("x1/u1", 1, 1).eval_grad(v1(3), v1(2));
  CHECK(vg.value == 1.5);
  CHECK(vg.grad[0] == Approx(0.5));
  CHECK(vg.grad[1] == Approx(-0.75));
}

TEST_CASE("printing and reparsing gives an identical tree") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Expr e = Expr::parse(avgmpc::random_polynomial(rng, 2, 2, 4), 2, 2);
    const Expr again = Expr::parse(e.to_string(), 2, 2);
    CHECK(again == e);
    CHECK(again.to_string() == e.to_string());
  }
}

TEST_CASE("gradients agree with central differences on random polynomials") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> point(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Expr e = Expr::parse(avgmpc::random_polynomial(rng, 2, 2, 4), 2, 2);
    const Vector x = Vector::NullaryExpr(2, [&] { return point(rng); });
    const Vector u = Vector::NullaryExpr(2, [&] { return point(rng); });
    CHECK(avgmpc::gradient_mismatch(e, x, u) <= 1e-5);
    CHECK(e.eval_grad(x, u).value == e.eval(x, u));
  }
}

TEST_CASE("dimension mismatch is rejected") {
  const Expr e = Expr::parse("x1+u1", 1, 1);
  CHECK_THROWS_AS(e.eval(Vector::Zero(2), v1(0)), avgmpc::DomainError);
}
