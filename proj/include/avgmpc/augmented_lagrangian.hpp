#pragma once

// Augmented Lagrangian method for
//
//   min  phi(z)   s.t.  lo <= z <= hi,  g(z) <= 0,  c(z) = 0.
//
// Bounds are handled by projection. Each outer iteration minimizes the
// Powell-Hestenes-Rockafellar function
//
//   psi(z) = phi(z) + sum_i [max(0, y_i + rho g_i)^2 - y_i^2] / (2 rho)
//                   + sum_j  mu_j c_j + rho/2 c_j^2
//
// with a projected quasi-Newton method whose model Hessian is a damped BFGS
// approximation of the Lagrangian plus the exact Gauss-Newton part
// rho (G_A^T G_A + C^T C) of the penalty.

#include "avgmpc/types.hpp"

#include <functional>
#include <vector>

namespace avgmpc {

struct NlpEvaluation {
  double objective = 0.0;
  Vector gradient;  // size dim
  Vector ineq;      // g(z), feasible when <= 0
  Matrix ineq_jac;  // rows(g) x dim
  Vector eq;        // c(z)
  Matrix eq_jac;    // rows(c) x dim
};

/// Fills `out` at `z`. Must size every member; empty constraint blocks are allowed.
using NlpEvaluator = std::function<void(const Vector& z, NlpEvaluation& out)>;

struct AlOptions {
  double initial_penalty = 1.0;
  double penalty_growth = 10.0;
  double max_penalty = 1e12;
  int max_outer = 10;
  int max_inner = 500;
  double feasibility_tol = 1e-8;
  double stationarity_tol = 1e-6;
};

struct AlResult {
  Vector z;
  double objective = 0.0;
  double max_violation = 0.0;
  double stationarity = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
  Vector ineq_multipliers;
  Vector eq_multipliers;
  /// Violation of every accepted outer iterate, in order. Nonincreasing.
  std::vector<double> accepted_violations;
};

/// max(0, max_i g_i, max_j |c_j|)
double max_violation(const NlpEvaluation& ev);

AlResult minimize_augmented_lagrangian(const NlpEvaluator& evaluate, const Box& bounds,
                                       const Vector& z0, const AlOptions& options = {});

}  // namespace avgmpc
