#pragma once

// JSON run configuration: "model", "experiment", "solver" and "output".

#include "avgmpc/closedloop.hpp"
#include "avgmpc/diagnostics.hpp"
#include "avgmpc/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace avgmpc {

struct ModelDefinition {
  std::string name;  // empty for a fully custom model
  int n = 1, m = 1, p = 1;
  std::vector<std::string> f;
  std::string ell;
  std::vector<std::string> h;
  std::string lambda;
  std::vector<double> x_lower, x_upper, u_lower, u_upper;
  std::vector<double> lambda_bar;
  double a = 0.0, omega = 0.0, lipschitz_h = 0.0;
  bool enforce_output_constraint = true;

  bool operator==(const ModelDefinition&) const = default;

  /// Uses the compiled built-in model when the definition is unchanged from it.
  SystemModel build_model() const;
  DissipativityCertificate build_certificate() const;
};

/// Expression strings of the built-in model.
ModelDefinition builtin_model_definition(const std::string& name);

struct ExperimentConfig {
  int horizon = 12;
  int period = 6;
  int steps = 30;
  std::vector<double> x0{2.0};
  std::string history = "h(1,1)*4,h(1,2)";
  std::vector<double> epsilons{0.1};
  std::vector<int> horizons{10, 12};  // turnpike comparison
  LyapunovVariant lyapunov = LyapunovVariant::kSuccessorHistory;
  double w_tolerance = 1e-3;
};

struct OutputConfig {
  std::string dir = ".";
  bool svg = false;
};

struct RunConfig {
  ModelDefinition model;
  ExperimentConfig experiment;
  OcpOptions solver;
  OutputConfig output;
};

/// Built-in "scalar-example" model with the default closed-loop experiment.
RunConfig default_run_config();

/// Throws ConfigError on malformed or inconsistent input.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Resolves a history description into H0. Accepted forms:
///   "steady"                 every column h_s
///   "constant:(x..,u..)"     every column h(x, u)
///   "h(x..,u..)*4,h(..),-1"  comma separated items, each a number or h(..),
///                            optionally repeated with *count; values fill
///                            columns oldest first, p values per column
HistoryState resolve_history(const std::string& text, const EconomicSetup& setup, int period);

LyapunovVariant parse_lyapunov_variant(const std::string& s);
std::string to_string(LyapunovVariant v);

}  // namespace avgmpc
