#pragma once

// Controlled system, box constraint set Z, stage cost, auxiliary output and
// the user-supplied dissipativity certificate.

#include "avgmpc/expr.hpp"
#include "avgmpc/history.hpp"
#include "avgmpc/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace avgmpc {

/// Values and first derivatives of f, ell and h at one (x, u).
struct StageLinearization {
  Vector f;
  Matrix f_x, f_u;  // n x n, n x m
  double ell = 0.0;
  Vector ell_x, ell_u;
  Vector h;
  Matrix h_x, h_u;  // p x n, p x m
};

class SystemModel {
 public:
  struct Functions {
    std::function<Vector(const Vector& x, const Vector& u)> dynamics;
    std::function<double(const Vector& x, const Vector& u)> stage_cost;
    std::function<Vector(const Vector& x, const Vector& u)> output;
    /// Optional; central differences are used when empty.
    std::function<StageLinearization(const Vector& x, const Vector& u)> linearize;
  };

  SystemModel(int n, int m, int p, Functions functions, Box state_box, Box input_box);

  /// Model from expression strings in x1..xn, u1..um.
  static SystemModel from_expressions(int n, int m, int p, const std::vector<std::string>& f,
                                      const std::string& ell, const std::vector<std::string>& h,
                                      Box state_box, Box input_box);

  int n() const { return n_; }
  int m() const { return m_; }
  int p() const { return p_; }
  const Box& state_box() const { return state_box_; }
  const Box& input_box() const { return input_box_; }

  Vector f(const Vector& x, const Vector& u) const { return fns_.dynamics(x, u); }
  double ell(const Vector& x, const Vector& u) const { return fns_.stage_cost(x, u); }
  Vector h(const Vector& x, const Vector& u) const { return fns_.output(x, u); }
  StageLinearization linearize(const Vector& x, const Vector& u) const;

  bool in_z(const Vector& x, const Vector& u, double tol = 0.0) const {
    return state_box_.contains(x, tol) && input_box_.contains(u, tol);
  }
  /// Throws DomainError when (x, u) is outside Z.
  void require_in_z(const Vector& x, const Vector& u, double tol = 1e-9) const;

 private:
  int n_, m_, p_;
  Functions fns_;
  Box state_box_;
  Box input_box_;
};

/// Scalar function of the state with gradient (the storage function).
class StorageFunction {
 public:
  StorageFunction() = default;
  StorageFunction(int n, std::function<double(const Vector&)> value,
                  std::function<Vector(const Vector&)> gradient = {});
  static StorageFunction from_expression(int n, const std::string& source);

  double operator()(const Vector& x) const { return value_(x) - offset_; }
  Vector gradient(const Vector& x) const;

  /// Copy shifted so that the result vanishes at `x_s`.
  StorageFunction normalized_at(const Vector& x_s) const;

 private:
  int n_ = 0;
  std::function<double(const Vector&)> value_;
  std::function<Vector(const Vector&)> gradient_;
  double offset_ = 0.0;
};

/// Storage function lambda, multiplier lambda_bar >= 0, polynomial lower bound
/// rho(r) >= a r^omega and Lipschitz constant L_h of h.
class DissipativityCertificate {
 public:
  DissipativityCertificate(StorageFunction storage, Vector multiplier, double a, double omega,
                           double lipschitz_h);

  const StorageFunction& storage() const { return storage_; }
  const Vector& multiplier() const { return multiplier_; }
  double a() const { return a_; }
  double omega() const { return omega_; }
  double lipschitz_h() const { return lipschitz_h_; }

  double rho(double r) const;

  DissipativityCertificate with_storage(StorageFunction s) const;

 private:
  StorageFunction storage_;
  Vector multiplier_;
  double a_, omega_, lipschitz_h_;
};

struct SteadyState {
  Vector x;
  Vector u;
  double ell = 0.0;
  Vector h;

  /// H^s for period T: every column equal to h_s.
  HistoryState history(int period) const { return HistoryState::constant(period, h); }
};

struct SteadyStateOptions {
  int grid_points = 201;  // per dimension
  long max_grid_total = 4'000'000;
  int refine_candidates = 8;
  double feasibility_tol = 1e-8;
  bool enforce_output_constraint = true;
};

/// Global minimizer over Z of ell subject to x = f(x, u), h <= 0, by dense
/// grid search followed by local refinement. Throws InfeasibleError.
SteadyState solve_steady_state(const SystemModel& model, const SteadyStateOptions& options = {});

/// ell - ell_s + lambda(x) - lambda(f(x,u)) + lambda_bar^T h. Throws DomainError outside Z.
double eval_rotated_stage_cost(const SystemModel& model, const DissipativityCertificate& cert,
                               const SteadyState& ss, const Vector& x, const Vector& u);

/// Minimum over a uniform grid on Z of the strict dissipation margin
/// ell - ell_s + lambda_bar^T h - a ||(x-x_s, u-u_s)||^omega - lambda(f) + lambda(x).
/// The certificate is accepted iff the result is >= -1e-9.
double check_dissipativity_grid(const SystemModel& model, const DissipativityCertificate& cert,
                                const SteadyState& ss, int grid_density);

inline constexpr double kCertificateTolerance = 1e-9;

struct OutputExtremes {
  double theta_low = 0.0;   // inf of lambda_bar^T h over Z
  double theta_high = 0.0;  // sup of lambda_bar^T h over Z
  Vector h_low;             // componentwise inf of h over Z
  Vector h_high;            // componentwise sup of h over Z

  OutputRange range() const { return {h_low, h_high}; }
};

OutputExtremes output_extremes(const SystemModel& model, const DissipativityCertificate& cert,
                               int grid_density = 51);

/// sup over a state-box grid of |lambda(x)|.
double storage_sup_abs(const SystemModel& model, const DissipativityCertificate& cert,
                       int grid_density = 101);

struct SetupOptions {
  SteadyStateOptions steady_state;
  int extremes_grid = 51;
  int storage_grid = 101;
  double complementarity_tol = 1e-8;
};

/// Model, certificate and the derived steady-state data used by every
/// downstream computation. Immutable once built.
class EconomicSetup {
 public:
  /// Solves the steady state, normalizes lambda(x_s) = 0 and validates
  /// lambda_bar^T h_s = 0 (ConfigError otherwise).
  static std::shared_ptr<const EconomicSetup> create(SystemModel model,
                                                     DissipativityCertificate cert,
                                                     const SetupOptions& options = {});

  /// Same, with a known steady state.
  static std::shared_ptr<const EconomicSetup> create(SystemModel model,
                                                     DissipativityCertificate cert,
                                                     SteadyState ss,
                                                     const SetupOptions& options = {});

  const SystemModel& model() const { return model_; }
  const DissipativityCertificate& cert() const { return cert_; }
  const SteadyState& steady_state() const { return ss_; }
  const OutputExtremes& extremes() const { return extremes_; }
  /// C = 2 sup |lambda| over the state box.
  double storage_bound() const { return storage_bound_; }

  double rotated_stage_cost(const Vector& x, const Vector& u) const {
    return eval_rotated_stage_cost(model_, cert_, ss_, x, u);
  }

 private:
  EconomicSetup(SystemModel model, DissipativityCertificate cert, SteadyState ss)
      : model_(std::move(model)), cert_(std::move(cert)), ss_(std::move(ss)) {}

  SystemModel model_;
  DissipativityCertificate cert_;
  SteadyState ss_;
  OutputExtremes extremes_;
  double storage_bound_ = 0.0;
};

/// x+ = x u on [-10, 10]^2, ell = (x-3)^2 + u^2, h = 2x + u - 5 with
/// lambda = 1.5 (x - 2), lambda_bar = 1, rho(r) = 0.25 r^2, L_h = 3.
SystemModel scalar_example_model();
DissipativityCertificate scalar_example_certificate();

}  // namespace avgmpc
