#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace avgmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Inconsistent or invalid user configuration (dimensions, bounds, certificate).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// No feasible point could be found. Carries the smallest constraint
/// violation that was reached.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Axis-aligned box [lower, upper].
class Box {
 public:
  Box() = default;
  Box(Vector lower, Vector upper);

  Eigen::Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  bool contains(const Vector& v, double tol = 0.0) const;
  Vector project(const Vector& v) const;
  Vector midpoint() const { return 0.5 * (lower_ + upper_); }

 private:
  Vector lower_;
  Vector upper_;
};

}  // namespace avgmpc
