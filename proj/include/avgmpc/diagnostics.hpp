#pragma once

// Turnpike statistics of open-loop solutions and Lyapunov-type functions
// along closed-loop traces.

#include "avgmpc/closedloop.hpp"
#include "avgmpc/ocp.hpp"

#include <span>
#include <vector>

namespace avgmpc {

enum class ProximityNorm { kEuclidean, kInfinity };

struct TurnpikeReport {
  double epsilon = 0.0;
  std::vector<int> proximity_set;    // P^eps, sorted
  int Q = 0;                         // |P^eps|
  std::vector<int> consecutive_set;  // k with [k-T+1, k] inside P^eps
  double delta = 0.0;                // realized J_N - N ell_s
  double C = 0.0;                    // 2 sup |lambda|
  double C_prime = 0.0;              // delta + C - k_{T,N} theta_low
  double rho_eps = 0.0;              // a eps^omega
  double count_bound_lhs = 0.0;           // Q
  double count_bound_rhs = 0.0;           // N - C' / rho(eps)
  bool count_bound_informative = false;   // rhs > 0
  bool count_bound_holds = true;
  /// Largest [[H - H^s]] over histories rebuilt from the T-1 proximate steps
  /// ending at each k in the consecutive set, and its bound sqrt(p) L_h eps.
  double history_norm_max = 0.0;
  double history_norm_bound = 0.0;
  bool history_bound_holds = true;
};

TurnpikeReport turnpike_report(const OcpSolution& solution, const EconomicSetup& setup, int period,
                               double epsilon, ProximityNorm norm = ProximityNorm::kEuclidean);

/// c and the history argument of the ISS term.
///   kCertified:        c = a (n+m)^(-omega/2) / (2 L_h (T-1)), V at H(k)
///   kSuccessorHistory: c = a / (L_h (T-1)),                  V at H(k+1)
enum class LyapunovVariant { kCertified, kSuccessorHistory };

double lyapunov_constant(const EconomicSetup& setup, int period, LyapunovVariant variant);

struct LyapunovTrace {
  LyapunovVariant variant = LyapunovVariant::kCertified;
  double c = 0.0;
  std::vector<double> V_hat;  // per trace row
  std::vector<double> W_hat;  // per trace row
  std::vector<double> W;      // rows - T + 1 entries
};

/// Throws DomainError for T < 2 or when the trace is shorter than
/// `steps` + T - 1 rows (steps < 0 means as many as the trace allows).
LyapunovTrace lyapunov_trace(const ClosedLoopTrace& trace, const EconomicSetup& setup,
                             LyapunovVariant variant = LyapunovVariant::kCertified, int steps = -1);

struct DecreaseCheck {
  double max_increase = 0.0;
  int worst_k = -1;
  bool pass = true;
};

/// max_k values[k+1] - values[k] against `tol`.
DecreaseCheck max_increase_check(std::span<const double> values, double tol);
DecreaseCheck w_decrease_check(const LyapunovTrace& lt, double tol = 1e-3);

/// (T-1)^2 ||lambda_bar||_2 ||H - H^s||_1 with the induced matrix 1-norm.
double overlap_bound(const HistoryState& H, const Vector& h_s, const Vector& lambda_bar);

}  // namespace avgmpc
