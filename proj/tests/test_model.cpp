#include "avgmpc/model.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace avgmpc;
using Catch::Approx;
using oracle::scalar;

namespace {

SystemModel expression_model(const std::string& h = "2*x1 + u1 - 5") {
  const Box z(scalar(-10), scalar(10));
  return SystemModel::from_expressions(1, 1, 1, {"x1*u1"}, "(x1-3)^2 + u1^2", {h}, z, z);
}

DissipativityCertificate certificate(double a) {
  return DissipativityCertificate(StorageFunction::from_expression(1, "1.5*(x1-2)"), scalar(1.0), a, 2.0, 3.0);
}

}  // namespace

TEST_CASE("brute-force oracle for the scalar steady state") {
  const auto with = oracle::brute_force_steady_state(true);
  CHECK(with.x == Approx(2.0));
  CHECK(with.u == Approx(1.0));
  CHECK(with.ell == Approx(2.0));
  const auto without = oracle::brute_force_steady_state(false);
  CHECK(without.x == Approx(3.0));
  CHECK(without.ell == Approx(1.0));
}

TEST_CASE("optimal steady state of the example") {
  const SteadyState ss = solve_steady_state(scalar_example_model());
  CHECK(ss.x[0] == Approx(2.0).margin(1e-6));
  CHECK(ss.u[0] == Approx(1.0).margin(1e-6));
  CHECK(ss.ell == Approx(2.0).margin(1e-6));
  CHECK(std::abs(ss.h[0]) <= 1e-8);
  CHECK(std::abs(scalar_example_model().f(ss.x, ss.u)[0] - ss.x[0]) <= 1e-8);
}

TEST_CASE("steady state from expressions matches the compiled model") {
  const SteadyState a = solve_steady_state(expression_model());
  const SteadyState b = solve_steady_state(scalar_example_model());
  CHECK(a.x[0] == Approx(b.x[0]).margin(1e-9));
  CHECK(a.u[0] == Approx(b.u[0]).margin(1e-9));
}

TEST_CASE("dropping the output constraint moves the steady state") {
  SteadyStateOptions opt;
  opt.enforce_output_constraint = false;
  const SteadyState ss = solve_steady_state(scalar_example_model(), opt);
  CHECK(ss.x[0] == Approx(3.0).margin(1e-6));
  CHECK(ss.u[0] == Approx(1.0).margin(1e-6));
  CHECK(ss.ell == Approx(1.0).margin(1e-6));
}

TEST_CASE("steady-state solve is deterministic") {
  const SteadyState a = solve_steady_state(expression_model());
  const SteadyState b = solve_steady_state(expression_model());
  CHECK(a.x == b.x);
  CHECK(a.u == b.u);
  CHECK(a.ell == b.ell);
}

TEST_CASE("no steady state satisfies an impossible output constraint") {
  CHECK_THROWS_AS(solve_steady_state(expression_model("1 + x1^2")), InfeasibleError);
}

TEST_CASE("rotated stage cost examples") {
  const auto& setup = oracle::example_setup();
  CHECK(setup->rotated_stage_cost(scalar(2), scalar(1)) == Approx(0.0).margin(1e-12));
  CHECK(setup->rotated_stage_cost(scalar(1), scalar(1)) == Approx(1.0).margin(1e-12));
  CHECK(setup->rotated_stage_cost(scalar(3), scalar(0.5)) == Approx(2.0).margin(1e-12));
  CHECK_THROWS_AS(setup->rotated_stage_cost(scalar(11), scalar(1)), DomainError);
}

TEST_CASE("rotated stage cost is nonnegative on a grid") {
  const auto& setup = oracle::example_setup();
  double worst = 1e300;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j)
      worst = std::min(worst, setup->rotated_stage_cost(scalar(-10 + 0.1 * i), scalar(-10 + 0.1 * j)));
  CHECK(worst >= -1e-9);
}

TEST_CASE("dissipativity grid check accepts the certificate and rejects an oversized bound") {
  const SystemModel model = scalar_example_model();
  const SteadyState ss = solve_steady_state(model);
  CHECK(check_dissipativity_grid(model, certificate(0.25), ss, 101) >= -kCertificateTolerance);
  CHECK(check_dissipativity_grid(model, certificate(10.0), ss, 101) < 0.0);
  CHECK(check_dissipativity_grid(model, certificate(0.25), ss, 2) >= -kCertificateTolerance);
  CHECK_THROWS_AS(check_dissipativity_grid(model, certificate(0.25), ss, 1), DomainError);
}

TEST_CASE("output extremes") {
  const auto& setup = oracle::example_setup();
  const OutputExtremes& e = setup->extremes();
  CHECK(e.theta_low == Approx(-35.0));
  CHECK(e.theta_high == Approx(25.0));
  CHECK(e.h_low[0] == Approx(-35.0));
  CHECK(e.h_high[0] == Approx(25.0));
  CHECK(e.theta_low <= setup->cert().multiplier().dot(setup->steady_state().h));

  const Box z(scalar(-10), scalar(10));
  const SystemModel zero = SystemModel::from_expressions(1, 1, 1, {"x1*u1"}, "x1^2", {"0"}, z, z);
  const OutputExtremes ze = output_extremes(zero, certificate(0.25));
  CHECK(ze.theta_low == 0.0);
  CHECK(ze.theta_high == 0.0);
  CHECK(ze.h_low[0] == 0.0);
  CHECK(ze.h_high[0] == 0.0);
}

TEST_CASE("nonlinear output extremes use refinement") {
  const Box z(scalar(-1), scalar(2));
  // h = -(x - 0.3)^2 has its maximum 0 at x = 0.3, off the coarse grid.
  const SystemModel m = SystemModel::from_expressions(1, 1, 1, {"x1"}, "x1^2", {"-(x1-0.3)^2 + 0*u1"}, z, z);
  const OutputExtremes e = output_extremes(m, certificate(0.25), 4);
  CHECK(e.h_high[0] == Approx(0.0).margin(1e-10));
  CHECK(e.h_low[0] == Approx(-2.89));
}

TEST_CASE("storage normalization and constant C") {
  const auto& setup = oracle::example_setup();
  CHECK(setup->cert().storage()(setup->steady_state().x) == 0.0);
  CHECK(setup->storage_bound() == Approx(36.0));
}

TEST_CASE("complementarity violation is a configuration error") {
  // lambda_bar^T h_s = 1 * (-1) for the constant output h = -1.
  const Box z(scalar(-10), scalar(10));
  SystemModel m = SystemModel::from_expressions(1, 1, 1, {"x1*u1"}, "(x1-3)^2 + u1^2", {"-1"}, z, z);
  CHECK_THROWS_AS(EconomicSetup::create(m, certificate(0.25)), ConfigError);
}

TEST_CASE("invalid models and certificates are rejected") {
  CHECK_THROWS_AS(Box(scalar(1), scalar(0)), ConfigError);
  const Box z(scalar(-10), scalar(10));
  CHECK_THROWS_AS(SystemModel::from_expressions(1, 1, 1, {"x1", "x1"}, "x1", {"x1"}, z, z), ConfigError);
  CHECK_THROWS_AS(SystemModel::from_expressions(1, 1, 1, {"x2"}, "x1", {"x1"}, z, z), expr::ParseError);
  const StorageFunction s = StorageFunction::from_expression(1, "x1");
  CHECK_THROWS_AS(DissipativityCertificate(s, scalar(-1), 1, 1, 1), ConfigError);
  CHECK_THROWS_AS(DissipativityCertificate(s, scalar(1), 0, 1, 1), ConfigError);
  CHECK_THROWS_AS(DissipativityCertificate(s, scalar(1), 1, -1, 1), ConfigError);
  CHECK_THROWS_AS(DissipativityCertificate(s, scalar(1), 1, 1, 0), ConfigError);
}

TEST_CASE("finite-difference linearization matches the analytic one") {
  SystemModel::Functions fns;
  fns.dynamics = [](const Vector& x, const Vector& u) { return Vector::Constant(1, x[0] * u[0]); };
  fns.stage_cost = [](const Vector& x, const Vector& u) { return (x[0] - 3) * (x[0] - 3) + u[0] * u[0]; };
  fns.output = [](const Vector& x, const Vector& u) { return Vector::Constant(1, 2 * x[0] + u[0] - 5); };
  const Box z(scalar(-10), scalar(10));
  const SystemModel fd(1, 1, 1, fns, z, z);
  const SystemModel exact = scalar_example_model();
  const StageLinearization a = fd.linearize(scalar(1.3), scalar(-0.7));
  const StageLinearization b = exact.linearize(scalar(1.3), scalar(-0.7));
  CHECK(a.f_x(0, 0) == Approx(b.f_x(0, 0)).epsilon(1e-8));
  CHECK(a.f_u(0, 0) == Approx(b.f_u(0, 0)).epsilon(1e-8));
  CHECK(a.ell_x[0] == Approx(b.ell_x[0]).epsilon(1e-7));
  CHECK(a.ell_u[0] == Approx(b.ell_u[0]).epsilon(1e-7));
  CHECK(a.h_x(0, 0) == Approx(b.h_x(0, 0)).epsilon(1e-8));
}
