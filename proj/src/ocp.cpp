#include "avgmpc/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace avgmpc {

void OcpSpec::validate() const {
  if (!setup) throw ConfigError("OCP has no model setup");
  const SystemModel& model = setup->model();
  if (period < 1) throw ConfigError("period T must be >= 1");
  if (horizon < period)
    throw ConfigError("horizon N = " + std::to_string(horizon) + " must be >= period T = " +
                      std::to_string(period));
  if (x0.size() != model.n()) throw ConfigError("initial state has wrong dimension");
  if (!model.state_box().contains(x0, 1e-9)) throw ConfigError("initial state outside the state box");
  if (history.period() != period || history.output_dim() != model.p())
    throw ConfigError("history shape does not match (p, T)");
  if (!in_history_set(history, setup->extremes().range()))
    throw ConfigError("initial history outside the admissible output range");
  if (warm_start) {
    if (static_cast<int>(warm_start->size()) != horizon)
      throw ConfigError("warm start must contain N inputs");
    for (const Vector& u : *warm_start)
      if (u.size() != model.m()) throw ConfigError("warm-start input has wrong dimension");
  }
}

Rollout rollout(const SystemModel& model, const Vector& x0, const std::vector<Vector>& u) {
  Rollout r;
  r.x.reserve(u.size() + 1);
  r.x.push_back(x0);
  for (const Vector& uk : u) {
    const Vector& xk = r.x.back();
    r.h.push_back(model.h(xk, uk));
    r.ell.push_back(model.ell(xk, uk));
    r.cost += r.ell.back();
    r.x.push_back(model.f(xk, uk));
  }
  return r;
}

namespace {

std::vector<Vector> split_inputs(const Vector& z, int horizon, int m) {
  std::vector<Vector> u;
  u.reserve(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) u.push_back(z.segment(static_cast<Eigen::Index>(k) * m, m));
  return u;
}

Vector join_inputs(const std::vector<Vector>& u) {
  const Eigen::Index m = u.empty() ? 0 : u.front().size();
  Vector z(static_cast<Eigen::Index>(u.size()) * m);
  for (std::size_t k = 0; k < u.size(); ++k) z.segment(static_cast<Eigen::Index>(k) * m, m) = u[k];
  return z;
}

int residual_count(const OcpSpec& spec) {
  const SystemModel& model = spec.setup->model();
  const int N = spec.horizon, T = spec.period, p = model.p();
  return 2 * N * (model.n() + model.m()) + (T - 1) * p + (N - T + 1) * p;
}

}  // namespace

void evaluate_ocp(const OcpSpec& spec, const Vector& z, NlpEvaluation& out) {
  const EconomicSetup& setup = *spec.setup;
  const SystemModel& model = setup.model();
  const int n = model.n(), m = model.m(), p = model.p();
  const int N = spec.horizon, T = spec.period;
  const Eigen::Index dim = static_cast<Eigen::Index>(N) * m;
  const Vector& lb = setup.cert().multiplier();
  const Vector xlo = model.state_box().lower(), xhi = model.state_box().upper();
  const Vector ulo = model.input_box().lower(), uhi = model.input_box().upper();

  const int rows = residual_count(spec);
  out.ineq.resize(rows);
  out.ineq_jac.setZero(rows, dim);
  out.eq.resize(0);
  out.eq_jac.resize(0, dim);
  out.gradient.setZero(dim);
  out.objective = 0.0;

  const int upper_offset = N * (n + m);
  const int history_offset = 2 * upper_offset;
  const int window_offset = history_offset + (T - 1) * p;

  Vector x = spec.x0;
  Matrix S = Matrix::Zero(n, dim);
  std::vector<Vector> h(static_cast<std::size_t>(N));
  std::vector<Matrix> h_jac(static_cast<std::size_t>(N));
  double rotated = 0.0;
  const StorageFunction& lambda = setup.cert().storage();
  const double ell_s = setup.steady_state().ell;

  for (int k = 0; k < N; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(k) * m;
    const Vector u = z.segment(col, m);
    const StageLinearization s = model.linearize(x, u);

    const int lo_row = k * (n + m);
    const int hi_row = upper_offset + k * (n + m);
    out.ineq.segment(lo_row, n) = xlo - x;
    out.ineq.segment(hi_row, n) = x - xhi;
    out.ineq_jac.block(lo_row, 0, n, dim) = -S;
    out.ineq_jac.block(hi_row, 0, n, dim) = S;
    out.ineq.segment(lo_row + n, m) = ulo - u;
    out.ineq.segment(hi_row + n, m) = u - uhi;
    out.ineq_jac.block(lo_row + n, col, m, m) = -Matrix::Identity(m, m);
    out.ineq_jac.block(hi_row + n, col, m, m) = Matrix::Identity(m, m);

    out.objective += s.ell;
    out.gradient.noalias() += S.transpose() * s.ell_x;
    out.gradient.segment(col, m) += s.ell_u;

    h[static_cast<std::size_t>(k)] = s.h;
    Matrix hj = s.h_x * S;
    hj.block(0, col, p, m) += s.h_u;
    h_jac[static_cast<std::size_t>(k)] = std::move(hj);

    const Vector x_next = s.f;
    rotated += s.ell - ell_s + lambda(x) - lambda(x_next) + lb.dot(s.h);

    Matrix S_next = s.f_x * S;
    S_next.block(0, col, n, m) += s.f_u;
    S = std::move(S_next);
    x = x_next;
  }

  for (int j = 1; j <= T - 1; ++j) {
    Vector r = Vector::Zero(p);
    Matrix rj = Matrix::Zero(p, dim);
    for (int i = j; i <= T - 1; ++i) r += spec.history.column(i - 1);
    for (int k = 0; k < j; ++k) {
      r += h[static_cast<std::size_t>(k)];
      rj += h_jac[static_cast<std::size_t>(k)];
    }
    const int row = history_offset + (j - 1) * p;
    out.ineq.segment(row, p) = r;
    out.ineq_jac.block(row, 0, p, dim) = rj;
  }
  for (int i = 0; i <= N - T; ++i) {
    Vector r = Vector::Zero(p);
    Matrix rj = Matrix::Zero(p, dim);
    for (int k = i; k < i + T; ++k) {
      r += h[static_cast<std::size_t>(k)];
      rj += h_jac[static_cast<std::size_t>(k)];
    }
    const int row = window_offset + i * p;
    out.ineq.segment(row, p) = r;
    out.ineq_jac.block(row, 0, p, dim) = rj;
  }

  if (spec.objective == Objective::kRotated) {
    // Telescoped gradient: lambda(x0) is fixed and lambda(x_k) cancels for 0 < k < N.
    for (int k = 0; k < N; ++k) out.gradient.noalias() += h_jac[static_cast<std::size_t>(k)].transpose() * lb;
    out.gradient.noalias() -= S.transpose() * lambda.gradient(x);
    out.objective = rotated;
  }
}

namespace {

OcpSolution make_solution(const OcpSpec& spec, const AlResult& r) {
  const SystemModel& model = spec.setup->model();
  OcpSolution sol;
  sol.u = split_inputs(r.z, spec.horizon, model.m());
  const Rollout ro = rollout(model, spec.x0, sol.u);
  sol.x_pred = ro.x;
  sol.h_pred = ro.h;
  sol.cost_original = ro.cost;
  sol.cost_rotated = rotated_cost(spec, sol.u);
  sol.J = spec.objective == Objective::kRotated ? sol.cost_rotated : sol.cost_original;
  sol.max_violation = r.max_violation;
  sol.stationarity = r.stationarity;
  sol.iterations = r.inner_iterations;
  sol.converged = r.converged;
  sol.accepted_violations = r.accepted_violations;
  return sol;
}

}  // namespace

Vector constraint_residuals(const OcpSpec& spec, const std::vector<Vector>& u) {
  if (static_cast<int>(u.size()) != spec.horizon) throw DomainError("input sequence must have length N");
  NlpEvaluation ev;
  evaluate_ocp(spec, join_inputs(u), ev);
  return ev.ineq;
}

double rotated_cost(const OcpSpec& spec, const std::vector<Vector>& u) {
  const EconomicSetup& setup = *spec.setup;
  const SystemModel& model = setup.model();
  const StorageFunction& lambda = setup.cert().storage();
  const Vector& lb = setup.cert().multiplier();
  double sum = 0.0;
  Vector x = spec.x0;
  for (const Vector& uk : u) {
    const Vector next = model.f(x, uk);
    sum += model.ell(x, uk) - setup.steady_state().ell + lambda(x) - lambda(next) +
           lb.dot(model.h(x, uk));
    x = next;
  }
  return sum;
}

double rotated_identity_check(const OcpSpec& spec, const std::vector<Vector>& u) {
  const EconomicSetup& setup = *spec.setup;
  const Rollout ro = rollout(setup.model(), spec.x0, u);
  const StorageFunction& lambda = setup.cert().storage();
  double output_sum = 0.0;
  for (const Vector& hk : ro.h) output_sum += setup.cert().multiplier().dot(hk);
  const double decomposition = ro.cost - static_cast<double>(u.size()) * setup.steady_state().ell +
                               lambda(spec.x0) - lambda(ro.x.back()) + output_sum;
  return std::abs(rotated_cost(spec, u) - decomposition);
}

OcpSolution solve(const OcpSpec& spec, const OcpOptions& options) {
  spec.validate();
  const SystemModel& model = spec.setup->model();
  const int N = spec.horizon, m = model.m();
  const Box bounds(model.input_box().lower().replicate(N, 1), model.input_box().upper().replicate(N, 1));
  const NlpEvaluator eval = [&spec](const Vector& z, NlpEvaluation& out) { evaluate_ocp(spec, z, out); };

  const Vector steady = model.input_box().project(spec.setup->steady_state().u).replicate(N, 1);
  std::vector<Vector> starts;
  starts.push_back(spec.warm_start ? join_inputs(*spec.warm_start) : steady);
  if (options.restarts) {
    if (spec.warm_start) starts.push_back(steady);
    starts.push_back(model.input_box().midpoint().replicate(N, 1));
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector random(static_cast<Eigen::Index>(N) * m);
    for (Eigen::Index i = 0; i < random.size(); ++i)
      random[i] = bounds.lower()[i] + unit(rng) * (bounds.upper()[i] - bounds.lower()[i]);
    starts.push_back(random);
  }

  std::optional<OcpSolution> best;
  double best_violation = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int attempts = 0;
  for (const Vector& z0 : starts) {
    const AlResult r = minimize_augmented_lagrangian(eval, bounds, z0, options.al);
    ++attempts;
    iterations += r.inner_iterations;
    best_violation = std::min(best_violation, r.max_violation);
    OcpSolution sol = make_solution(spec, r);
    const bool feasible = sol.max_violation <= options.accept_violation;
    if (feasible && (!best || sol.J < best->J - 1e-12)) best = std::move(sol);
    if (attempts == 1 && r.converged) break;
  }
  if (!best)
    throw InfeasibleError("no feasible input sequence found (best violation " +
                              std::to_string(best_violation) + ")",
                          best_violation);
  best->iterations = iterations;
  best->attempts = attempts;
  return *best;
}

}  // namespace avgmpc
