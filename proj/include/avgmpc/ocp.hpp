#pragma once

// N-step optimal control problem with pointwise, history-window and
// full-window constraints, solved by single shooting over the inputs.

#include "avgmpc/augmented_lagrangian.hpp"
#include "avgmpc/history.hpp"
#include "avgmpc/model.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace avgmpc {

enum class Objective { kOriginal, kRotated };

struct OcpSpec {
  std::shared_ptr<const EconomicSetup> setup;
  int horizon = 0;  // N
  int period = 1;   // T
  Vector x0;
  HistoryState history;  // H0
  Objective objective = Objective::kOriginal;
  std::optional<std::vector<Vector>> warm_start;

  /// Throws ConfigError on inconsistent dimensions, N < T, x0 outside the
  /// state box or H0 outside the admissible history set.
  void validate() const;
};

struct OcpOptions {
  AlOptions al;
  /// Largest violation still treated as feasible for a non-converged solve.
  double accept_violation = 1e-6;
  bool restarts = true;
  unsigned seed = 0;
};

struct OcpSolution {
  std::vector<Vector> u;       // N inputs
  std::vector<Vector> x_pred;  // N+1 states, x_pred[0] = x0
  std::vector<Vector> h_pred;  // N outputs
  double J = 0.0;              // value of the solved objective
  double cost_original = 0.0;  // J_N
  double cost_rotated = 0.0;   // rotated J_N
  double max_violation = 0.0;
  double stationarity = 0.0;
  int iterations = 0;  // inner iterations summed over all attempts
  int attempts = 0;
  bool converged = false;
  std::vector<double> accepted_violations;
};

/// States, outputs and stage costs generated by an input sequence.
struct Rollout {
  std::vector<Vector> x;  // N+1
  std::vector<Vector> h;  // N
  std::vector<double> ell;
  double cost = 0.0;
};

Rollout rollout(const SystemModel& model, const Vector& x0, const std::vector<Vector>& u);

/// Concatenated residuals, each <= 0 when feasible, in the order
/// pointwise lower, pointwise upper, history windows (j ascending),
/// full windows (i ascending). Pointwise rows are (x_k, u_k) per step k.
Vector constraint_residuals(const OcpSpec& spec, const std::vector<Vector>& u);

/// Rotated cost accumulated stage by stage.
double rotated_cost(const OcpSpec& spec, const std::vector<Vector>& u);

/// |stagewise rotated cost - (J - N ell_s + lambda(x0) - lambda(x_N) + sum lambda_bar^T h)|.
double rotated_identity_check(const OcpSpec& spec, const std::vector<Vector>& u);

/// Objective, residuals and their gradients at the stacked input vector z
/// (size N m); residual order as in constraint_residuals.
void evaluate_ocp(const OcpSpec& spec, const Vector& z, NlpEvaluation& out);

/// Local solution. Tries the warm start (default u_s) first and, if it does
/// not converge, restarts from u_s, the input-box midpoint and a seeded random
/// sequence. Throws InfeasibleError when no attempt is feasible.
OcpSolution solve(const OcpSpec& spec, const OcpOptions& options = {});

}  // namespace avgmpc
