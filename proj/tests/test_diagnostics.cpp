#include "avgmpc/diagnostics.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

using namespace avgmpc;
using Catch::Approx;
using oracle::scalar;

namespace {

OcpSolution solve_original(int N, int T, double x0, double history_value) {
  OcpSpec spec;
  spec.setup = oracle::example_setup();
  spec.horizon = N;
  spec.period = T;
  spec.x0 = scalar(x0);
  spec.history = HistoryState::constant(T, scalar(history_value));
  return solve(spec);
}

const ClosedLoopTrace& reference_trace() {
  static const ClosedLoopTrace trace = simulate(
      oracle::example_setup(), 12, scalar(2.0),
      HistoryState(6, 1, {scalar(-2), scalar(-2), scalar(-2), scalar(-2), scalar(-1)}), 30);
  return trace;
}

const ClosedLoopTrace& steady_trace() {
  static const ClosedLoopTrace trace =
      simulate(oracle::example_setup(), 8, scalar(2.0), HistoryState::constant(3, scalar(0.0)), 6);
  return trace;
}

}  // namespace

TEST_CASE("turnpike count grows with the horizon") {
  const auto& setup = *oracle::example_setup();
  const TurnpikeReport r10 = turnpike_report(solve_original(10, 3, 1.0, -2.0), setup, 3, 0.1);
  const TurnpikeReport r12 = turnpike_report(solve_original(12, 3, 1.0, -2.0), setup, 3, 0.1);
  CHECK(r12.Q >= r10.Q);
  CHECK(r10.Q == static_cast<int>(r10.proximity_set.size()));
  CHECK(r10.C == Approx(36.0));
  CHECK(r10.rho_eps == Approx(0.0025));
}

TEST_CASE("long horizon has a consecutive turnpike window") {
  const TurnpikeReport r = turnpike_report(solve_original(30, 3, 1.0, -2.0), *oracle::example_setup(), 3, 0.05);
  CHECK_FALSE(r.consecutive_set.empty());
  CHECK(r.consecutive_set == oracle::rescan_consecutive(r.proximity_set, 3, 30));
  CHECK(r.history_bound_holds);
  CHECK(r.history_norm_max <= r.history_norm_bound);
  CHECK(r.history_norm_bound == Approx(0.15));
  for (int k : r.proximity_set) {
    CHECK(k >= 0);
    CHECK(k < 30);
  }
}

TEST_CASE("trajectory at the steady state is proximate everywhere") {
  OcpSolution sol;
  sol.u.assign(8, scalar(1.0));
  sol.x_pred.assign(9, scalar(2.0));
  sol.h_pred.assign(8, scalar(0.0));
  sol.J = sol.cost_original = 16.0;
  sol.converged = true;
  const TurnpikeReport r = turnpike_report(sol, *oracle::example_setup(), 3, 0.01);
  CHECK(r.Q == 8);
  CHECK(r.consecutive_set == std::vector<int>{2, 3, 4, 5, 6, 7});
  CHECK(r.delta == Approx(0.0).margin(1e-9));
}

TEST_CASE("turnpike count bound holds across radii and horizons") {
  const auto& setup = *oracle::example_setup();
  for (int N : {6, 10, 12, 20}) {
    const OcpSolution sol = solve_original(N, 3, 1.0, -2.0);
    CHECK(sol.converged);
    if (!sol.converged) continue;
    for (double eps : {0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
      for (ProximityNorm norm : {ProximityNorm::kEuclidean, ProximityNorm::kInfinity}) {
        const TurnpikeReport r = turnpike_report(sol, setup, 3, eps, norm);
        CHECK(r.count_bound_informative == (r.count_bound_rhs > 0));
        if (r.count_bound_informative) CHECK(r.Q >= r.count_bound_rhs);
        CHECK(r.count_bound_holds);
        CHECK(r.consecutive_set == oracle::rescan_consecutive(r.proximity_set, 3, N));
        CHECK(r.history_bound_holds);
      }
    }
  }
}

TEST_CASE("Lyapunov constants") {
  const auto& setup = *oracle::example_setup();
  CHECK(lyapunov_constant(setup, 6, LyapunovVariant::kCertified) == Approx(1.0 / 240.0));
  CHECK(lyapunov_constant(setup, 6, LyapunovVariant::kSuccessorHistory) == Approx(1.0 / 60.0));
  CHECK_THROWS_AS(lyapunov_constant(setup, 1, LyapunovVariant::kCertified), DomainError);
}

TEST_CASE("W at the reference initial condition") {
  const auto& setup = *oracle::example_setup();
  const LyapunovTrace succ = lyapunov_trace(reference_trace(), setup, LyapunovVariant::kSuccessorHistory);
  CHECK(succ.W.size() == reference_trace().rows.size() - 5);
  CHECK(succ.W[0] == Approx(oracle::kW0).epsilon(0.05));

  const LyapunovTrace cert = lyapunov_trace(reference_trace(), setup, LyapunovVariant::kCertified);
  CHECK(cert.c == Approx(1.0 / 240.0));
  CHECK(cert.W[0] > 0.0);
  CHECK(cert.W[0] < succ.W[0]);
  for (std::size_t k = 0; k < cert.W.size(); ++k) {
    CHECK(cert.W[k] >= cert.W_hat[k] - 1e-9);
    CHECK(cert.W_hat[k] >= -1e-9);
  }
}

TEST_CASE("W decreases practically while the rotated value does not") {
  const auto& setup = *oracle::example_setup();
  for (LyapunovVariant v : {LyapunovVariant::kCertified, LyapunovVariant::kSuccessorHistory})
    CHECK(w_decrease_check(lyapunov_trace(reference_trace(), setup, v), 1e-3).pass);
  std::vector<double> values;
  for (const TraceRow& row : reference_trace().rows) values.push_back(row.J_tilde_star);
  const DecreaseCheck jt = max_increase_check(values, 1e-3);
  CHECK_FALSE(jt.pass);
  CHECK(jt.worst_k == 0);
  CHECK(jt.max_increase > 1e-3);
}

TEST_CASE("steady-state trace has a vanishing Lyapunov function") {
  const LyapunovTrace lt = lyapunov_trace(steady_trace(), *oracle::example_setup());
  for (double w : lt.W) CHECK(std::abs(w) <= 1e-5);
  CHECK(w_decrease_check(lt, 1e-6).max_increase <= 1e-6);
}

TEST_CASE("Lyapunov trace preconditions") {
  const auto& setup = *oracle::example_setup();
  const ClosedLoopTrace t1 =
      simulate(oracle::example_setup(), 4, scalar(2.0), HistoryState::constant(1, scalar(0.0)), 3);
  CHECK_THROWS_AS(lyapunov_trace(t1, setup), DomainError);
  CHECK_THROWS_AS(lyapunov_trace(steady_trace(), setup, LyapunovVariant::kCertified, 5), DomainError);
  CHECK(lyapunov_trace(steady_trace(), setup, LyapunovVariant::kCertified, 4).W.size() == 4);
}

TEST_CASE("max_increase_check on simple series") {
  const std::vector<double> v{3.0, 2.0, 2.5, 1.0};
  const DecreaseCheck d = max_increase_check(v, 0.1);
  CHECK(d.max_increase == Approx(0.5));
  CHECK(d.worst_k == 1);
  CHECK_FALSE(d.pass);
  CHECK(max_increase_check(v, 0.5).pass);
}

TEST_CASE("overlap bound on the history") {
  const Vector hs = scalar(0.0);
  CHECK(overlap_bound(HistoryState::constant(6, hs), hs, scalar(1.0)) == 0.0);
  const HistoryState H0(6, 1, {scalar(-2), scalar(-2), scalar(-2), scalar(-2), scalar(-1)});
  CHECK(overlap_bound(H0, hs, scalar(1.0)) == Approx(50.0));
  CHECK(overlap_bound(HistoryState(3, 1, {scalar(1), scalar(-3)}), hs, scalar(2.0)) == Approx(24.0));
}
