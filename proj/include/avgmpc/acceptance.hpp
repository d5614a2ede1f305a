#pragma once

// Built-in validation suite on the scalar example model.

#include "avgmpc/config.hpp"

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace avgmpc {

struct AcceptanceOptions {
  ModelDefinition model = builtin_model_definition("scalar-example");
  OcpOptions solver;
  /// Period used for the Lyapunov sub-criteria; below 2 they are skipped.
  int lyapunov_period = 6;
  unsigned seed = 0;
};

enum class Verdict { kPass, kFail, kSkip };

struct CriterionResult {
  std::string id;
  std::string label;
  Verdict verdict = Verdict::kFail;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceReport {
  std::vector<CriterionResult> results;
  std::vector<std::string> info;

  bool all_pass() const;
};

AcceptanceReport run_acceptance(const AcceptanceOptions& options = {});

/// One line per criterion followed by the informational lines.
void print_acceptance(std::ostream& out, const AcceptanceReport& report);

/// Random polynomial in x1..xn, u1..um: +, -, *, unary minus and small
/// integer powers over variables and constants.
std::string random_polynomial(std::mt19937_64& rng, int n, int m, int depth);

/// Largest relative mismatch between eval_grad and central differences
/// (step 1e-6), relative to max(1, |analytic|).
double gradient_mismatch(const expr::Expr& e, const Vector& x, const Vector& u);

}  // namespace avgmpc
