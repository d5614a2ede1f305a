#include "avgmpc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace avgmpc {

TurnpikeReport turnpike_report(const OcpSolution& solution, const EconomicSetup& setup, int period,
                               double epsilon, ProximityNorm norm) {
  const SteadyState& ss = setup.steady_state();
  const DissipativityCertificate& cert = setup.cert();
  const int N = static_cast<int>(solution.u.size());
  const int T = period;

  TurnpikeReport rep;
  rep.epsilon = epsilon;
  for (int k = 0; k < N; ++k) {
    Vector dev(ss.x.size() + ss.u.size());
    dev << solution.x_pred[static_cast<std::size_t>(k)] - ss.x, solution.u[static_cast<std::size_t>(k)] - ss.u;
    const double d = norm == ProximityNorm::kEuclidean ? dev.norm() : dev.lpNorm<Eigen::Infinity>();
    if (d <= epsilon) rep.proximity_set.push_back(k);
  }
  rep.Q = static_cast<int>(rep.proximity_set.size());

  int run = 0, last = -2;
  for (int k : rep.proximity_set) {
    run = k == last + 1 ? run + 1 : 1;
    last = k;
    if (run >= T) rep.consecutive_set.push_back(k);
  }

  rep.delta = solution.cost_original - N * ss.ell;
  rep.C = setup.storage_bound();
  rep.C_prime = rep.delta + rep.C - period_remainder(N, T) * setup.extremes().theta_low;
  rep.rho_eps = cert.rho(epsilon);
  rep.count_bound_lhs = rep.Q;
  rep.count_bound_rhs = N - rep.C_prime / rep.rho_eps;
  rep.count_bound_informative = rep.count_bound_rhs > 0.0;
  rep.count_bound_holds = !rep.count_bound_informative || rep.count_bound_lhs >= rep.count_bound_rhs;

  const int p = setup.model().p();
  rep.history_norm_bound = std::sqrt(static_cast<double>(p)) * cert.lipschitz_h() * epsilon;
  if (T >= 2) {
    for (int kx : rep.consecutive_set) {
      std::vector<Vector> cols;
      for (int j = kx - T + 2; j <= kx; ++j) cols.push_back(solution.h_pred[static_cast<std::size_t>(j)]);
      const HistoryState H(T, p, std::move(cols));
      rep.history_norm_max = std::max(rep.history_norm_max, norm_replacement(H.minus(ss.h)));
    }
  }
  rep.history_bound_holds = rep.history_norm_max <= rep.history_norm_bound + 1e-12;
  return rep;
}

double lyapunov_constant(const EconomicSetup& setup, int period, LyapunovVariant variant) {
  if (period < 2) throw DomainError("Lyapunov function requires T >= 2");
  const DissipativityCertificate& cert = setup.cert();
  const double denom = cert.lipschitz_h() * (period - 1);
  if (variant == LyapunovVariant::kSuccessorHistory) return cert.a() / denom;
  const int nm = setup.model().n() + setup.model().m();
  return cert.a() * std::pow(static_cast<double>(nm), -0.5 * cert.omega()) / (2.0 * denom);
}

LyapunovTrace lyapunov_trace(const ClosedLoopTrace& trace, const EconomicSetup& setup,
                             LyapunovVariant variant, int steps) {
  const int T = trace.period;
  if (T < 2) throw DomainError("Lyapunov function requires T >= 2");
  const int rows = static_cast<int>(trace.rows.size());
  const int K = steps < 0 ? rows - T + 1 : steps;
  if (K < 1 || rows < K + T - 1)
    throw DomainError("trace has " + std::to_string(rows) + " rows; W needs at least " +
                      std::to_string(std::max(K, 1) + T - 1) + " rows");

  LyapunovTrace lt;
  lt.variant = variant;
  lt.c = lyapunov_constant(setup, T, variant);
  const double omega = setup.cert().omega();
  const Vector& h_s = setup.steady_state().h;
  for (int k = 0; k < rows; ++k) {
    const TraceRow& row = trace.rows[static_cast<std::size_t>(k)];
    const HistoryState& H = variant == LyapunovVariant::kCertified ? row.history
                            : k + 1 < rows ? trace.rows[static_cast<std::size_t>(k + 1)].history
                                           : trace.history_final;
    const double v = iss_function(H, h_s, omega);
    lt.V_hat.push_back(v);
    lt.W_hat.push_back(row.J_tilde_star + lt.c * v);
  }
  for (int k = 0; k < K; ++k) {
    double w = 0.0;
    for (int j = 0; j < T; ++j) w += lt.W_hat[static_cast<std::size_t>(k + j)];
    lt.W.push_back(w);
  }
  return lt;
}

DecreaseCheck max_increase_check(std::span<const double> values, double tol) {
  DecreaseCheck out;
  out.max_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    const double inc = values[k + 1] - values[k];
    if (inc > out.max_increase) {
      out.max_increase = inc;
      out.worst_k = static_cast<int>(k);
    }
  }
  if (out.worst_k < 0) out.max_increase = 0.0;
  out.pass = out.max_increase <= tol;
  return out;
}

DecreaseCheck w_decrease_check(const LyapunovTrace& lt, double tol) {
  return max_increase_check(lt.W, tol);
}

double overlap_bound(const HistoryState& H, const Vector& h_s, const Vector& lambda_bar) {
  if (H.period() < 2) throw DomainError("bound requires T >= 2");
  const double t1 = H.period() - 1;
  return t1 * t1 * lambda_bar.norm() * deviation_one_norm(H, h_s);
}

}  // namespace avgmpc
