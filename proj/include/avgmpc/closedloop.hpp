#pragma once

// Receding-horizon loop on the extended state (x, H).

#include "avgmpc/ocp.hpp"

#include <optional>
#include <vector>

namespace avgmpc {

struct StepResult {
  Vector u_applied;
  Vector x_next;
  HistoryState history_next;
  OcpSolution original;
  OcpSolution rotated;
};

struct ClosedLoopOptions {
  OcpOptions ocp;
  /// Solve the original and the rotated problem on two threads.
  bool parallel_solves = true;
};

/// Warm starts carried from one step to the next.
struct WarmStarts {
  std::optional<std::vector<Vector>> original;
  std::optional<std::vector<Vector>> rotated;
};

/// Solves both problems at (x, H), applies the first input of the original
/// one and returns the successor. `warm` is replaced by the shifted solutions
/// with u_s appended.
StepResult step(const std::shared_ptr<const EconomicSetup>& setup, int horizon, const Vector& x,
                const HistoryState& history, WarmStarts& warm, const ClosedLoopOptions& options = {});

struct TraceRow {
  int k = 0;
  Vector x, u, h;
  double ell = 0.0;
  double J_star = 0.0;          // J*_N(x(k), H(k))
  double J_tilde_star = 0.0;    // rotated value function at (x(k), H(k))
  double history_norm = 0.0;    // [[H(k) - H^s]]
  double J_cl = 0.0;            // sum of ell(j) for j <= k
  double J_tilde_cl = 0.0;      // sum of rotated stage costs for j <= k
  HistoryState history;         // H(k)
};

struct ClosedLoopTrace {
  int horizon = 0;
  int period = 1;
  int steps = 0;  // K requested
  double ell_s = 0.0;
  std::vector<TraceRow> rows;
  Vector x_final;               // x(K)
  HistoryState history_final;   // H(K)
};

/// Raised when an OCP becomes infeasible; carries the trace up to the failure.
class SimulationHalted : public InfeasibleError {
 public:
  SimulationHalted(const std::string& what, double best_residual, ClosedLoopTrace partial)
      : InfeasibleError(what, best_residual), partial_(std::move(partial)) {}
  const ClosedLoopTrace& partial_trace() const { return partial_; }

 private:
  ClosedLoopTrace partial_;
};

ClosedLoopTrace simulate(const std::shared_ptr<const EconomicSetup>& setup, int horizon,
                         const Vector& x0, const HistoryState& h0, int steps,
                         const ClosedLoopOptions& options = {});

struct PerformanceResidual {
  std::vector<int> K;
  std::vector<double> r;              // J_cl(K) - [J*(0) - J*(K)] - K ell_s
  std::vector<double> r_per_step;     // r / K
  std::vector<double> rotated;        // J~_cl(K) - [J~*(0) - J~*(K)]
  std::vector<double> rotated_per_step;
  bool psi_uncorrected = true;        // the rotated series omits the psi term
};

/// Residuals for K = 1 .. rows-1 (J*(K) must be recorded).
PerformanceResidual performance_residual(const ClosedLoopTrace& trace);

/// Largest violation of the sliding-window constraints along the closed
/// loop, including windows that reach into H(0). Positive means violated.
double max_window_sum(const ClosedLoopTrace& trace);

}  // namespace avgmpc
