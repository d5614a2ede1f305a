#include "avgmpc/closedloop.hpp"

#include <future>
#include <limits>

namespace avgmpc {

namespace {

std::vector<Vector> shift_append(const std::vector<Vector>& u, const Vector& tail) {
  std::vector<Vector> out(u.begin() + 1, u.end());
  out.push_back(tail);
  return out;
}

}  // namespace

StepResult step(const std::shared_ptr<const EconomicSetup>& setup, int horizon, const Vector& x,
                const HistoryState& history, WarmStarts& warm, const ClosedLoopOptions& options) {
  OcpSpec original;
  original.setup = setup;
  original.horizon = horizon;
  original.period = history.period();
  original.x0 = x;
  original.history = history;
  original.objective = Objective::kOriginal;
  original.warm_start = warm.original;

  OcpSpec rotated = original;
  rotated.objective = Objective::kRotated;
  rotated.warm_start = warm.rotated;

  StepResult res;
  if (options.parallel_solves) {
    auto pending = std::async(std::launch::async, [&] { return solve(rotated, options.ocp); });
    res.original = solve(original, options.ocp);
    res.rotated = pending.get();
  } else {
    res.original = solve(original, options.ocp);
    res.rotated = solve(rotated, options.ocp);
  }

  const SystemModel& model = setup->model();
  res.u_applied = res.original.u.front();
  res.x_next = model.f(x, res.u_applied);
  res.history_next =
      shift_update(history, model.h(x, res.u_applied), setup->extremes().range());

  const Vector& u_s = setup->steady_state().u;
  warm.original = shift_append(res.original.u, u_s);
  warm.rotated = shift_append(res.rotated.u, u_s);
  return res;
}

ClosedLoopTrace simulate(const std::shared_ptr<const EconomicSetup>& setup, int horizon,
                         const Vector& x0, const HistoryState& h0, int steps,
                         const ClosedLoopOptions& options) {
  if (steps < 1) throw ConfigError("number of closed-loop steps K must be >= 1");
  const SystemModel& model = setup->model();
  const SteadyState& ss = setup->steady_state();
  const StorageFunction& lambda = setup->cert().storage();

  ClosedLoopTrace trace;
  trace.horizon = horizon;
  trace.period = h0.period();
  trace.steps = steps;
  trace.ell_s = ss.ell;

  Vector x = x0;
  HistoryState H = h0;
  WarmStarts warm;
  double J_cl = 0.0, J_tilde_cl = 0.0;
  for (int k = 0; k < steps; ++k) {
    StepResult res;
    try {
      res = step(setup, horizon, x, H, warm, options);
    } catch (const InfeasibleError& e) {
      trace.x_final = x;
      trace.history_final = H;
      throw SimulationHalted("closed loop halted at step " + std::to_string(k) + ": " + e.what(),
                             e.best_residual(), std::move(trace));
    }
    TraceRow row;
    row.k = k;
    row.x = x;
    row.u = res.u_applied;
    row.h = model.h(x, row.u);
    row.ell = model.ell(x, row.u);
    row.J_star = res.original.J;
    row.J_tilde_star = res.rotated.J;
    row.history_norm = norm_replacement(H.minus(ss.h));
    J_cl += row.ell;
    J_tilde_cl += row.ell - ss.ell + lambda(x) - lambda(res.x_next) +
                  setup->cert().multiplier().dot(row.h);
    row.J_cl = J_cl;
    row.J_tilde_cl = J_tilde_cl;
    row.history = H;
    trace.rows.push_back(std::move(row));
    x = res.x_next;
    H = res.history_next;
  }
  trace.x_final = x;
  trace.history_final = H;
  return trace;
}

PerformanceResidual performance_residual(const ClosedLoopTrace& trace) {
  PerformanceResidual out;
  if (trace.rows.empty()) return out;
  const double J0 = trace.rows.front().J_star;
  const double Jt0 = trace.rows.front().J_tilde_star;
  for (std::size_t K = 1; K < trace.rows.size(); ++K) {
    const TraceRow& last = trace.rows[K - 1];
    const TraceRow& at_K = trace.rows[K];
    const double kd = static_cast<double>(K);
    const double r = last.J_cl - (J0 - at_K.J_star) - kd * trace.ell_s;
    const double rt = last.J_tilde_cl - (Jt0 - at_K.J_tilde_star);
    out.K.push_back(static_cast<int>(K));
    out.r.push_back(r);
    out.r_per_step.push_back(r / kd);
    out.rotated.push_back(rt);
    out.rotated_per_step.push_back(rt / kd);
  }
  return out;
}

double max_window_sum(const ClosedLoopTrace& trace) {
  const int T = trace.period;
  if (trace.rows.empty()) return -std::numeric_limits<double>::infinity();
  // Output sequence: H(0) columns followed by the closed-loop outputs.
  std::vector<Vector> seq(trace.rows.front().history.columns().begin(),
                          trace.rows.front().history.columns().end());
  for (const TraceRow& r : trace.rows) seq.push_back(r.h);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start + static_cast<std::size_t>(T) <= seq.size(); ++start) {
    Vector sum = Vector::Zero(seq.front().size());
    for (int j = 0; j < T; ++j) sum += seq[start + static_cast<std::size_t>(j)];
    worst = std::max(worst, sum.maxCoeff());
  }
  return worst;
}

}  // namespace avgmpc
