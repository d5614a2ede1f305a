#include "avgmpc/config.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace avgmpc {

using nlohmann::json;

namespace {

constexpr const char* kBuiltinName = "scalar-example";

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void reject_unknown(const json& obj, const std::string& section, const std::set<std::string>& known) {
  if (!obj.is_object()) throw ConfigError("section \"" + section + "\" must be an object");
  for (const auto& [key, value] : obj.items())
    if (!known.contains(key)) throw ConfigError("unknown key \"" + key + "\" in section \"" + section + "\"");
}

template <typename T>
T get(const json& obj, const char* key, const std::string& section) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for \"" + section + "." + key + "\": " + e.what());
  }
}

std::vector<double> number_list(const json& v, const std::string& what) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError(what + " must be a number or an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(what + " must contain numbers only");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> string_list(const json& v, const std::string& what) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw ConfigError(what + " must be a string or an array of strings");
  std::vector<std::string> out;
  for (const json& e : v) {
    if (!e.is_string()) throw ConfigError(what + " must contain strings only");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void parse_model(const json& j, ModelDefinition& md) {
  reject_unknown(j, "model", {"name", "n", "m", "p", "f", "ell", "h", "lambda", "x_lower", "x_upper",
                              "u_lower", "u_upper", "lambda_bar", "a", "omega", "L_h",
                              "enforce_output_constraint"});
  if (j.contains("name")) {
    md = builtin_model_definition(get<std::string>(j, "name", "model"));
  } else {
    md = ModelDefinition{};
    for (const char* key : {"n", "m", "p", "f", "ell", "h", "lambda", "x_lower", "x_upper", "u_lower",
                            "u_upper", "lambda_bar", "a", "omega", "L_h"})
      if (!j.contains(key)) throw ConfigError(std::string("custom model needs \"model.") + key + "\"");
  }
  if (j.contains("n")) md.n = get<int>(j, "n", "model");
  if (j.contains("m")) md.m = get<int>(j, "m", "model");
  if (j.contains("p")) md.p = get<int>(j, "p", "model");
  if (j.contains("f")) md.f = string_list(j["f"], "model.f");
  if (j.contains("ell")) md.ell = get<std::string>(j, "ell", "model");
  if (j.contains("h")) md.h = string_list(j["h"], "model.h");
  if (j.contains("lambda")) md.lambda = get<std::string>(j, "lambda", "model");
  if (j.contains("x_lower")) md.x_lower = number_list(j["x_lower"], "model.x_lower");
  if (j.contains("x_upper")) md.x_upper = number_list(j["x_upper"], "model.x_upper");
  if (j.contains("u_lower")) md.u_lower = number_list(j["u_lower"], "model.u_lower");
  if (j.contains("u_upper")) md.u_upper = number_list(j["u_upper"], "model.u_upper");
  if (j.contains("lambda_bar")) md.lambda_bar = number_list(j["lambda_bar"], "model.lambda_bar");
  if (j.contains("a")) md.a = get<double>(j, "a", "model");
  if (j.contains("omega")) md.omega = get<double>(j, "omega", "model");
  if (j.contains("L_h")) md.lipschitz_h = get<double>(j, "L_h", "model");
  if (j.contains("enforce_output_constraint"))
    md.enforce_output_constraint = get<bool>(j, "enforce_output_constraint", "model");
}

void parse_experiment(const json& j, ExperimentConfig& ex) {
  reject_unknown(j, "experiment",
                 {"N", "T", "K", "x0", "history", "eps", "horizons", "lyapunov", "w_tolerance"});
  if (j.contains("N")) ex.horizon = get<int>(j, "N", "experiment");
  if (j.contains("T")) ex.period = get<int>(j, "T", "experiment");
  if (j.contains("K")) ex.steps = get<int>(j, "K", "experiment");
  if (j.contains("x0")) ex.x0 = number_list(j["x0"], "experiment.x0");
  if (j.contains("history")) {
    const json& h = j["history"];
    if (h.is_string()) {
      ex.history = h.get<std::string>();
    } else if (h.is_array()) {
      std::string text;
      for (const json& col : h) {
        for (double v : number_list(col, "experiment.history")) {
          if (!text.empty()) text += ',';
          text += format_number(v);
        }
      }
      ex.history = text;
    } else {
      throw ConfigError("experiment.history must be a string or an array");
    }
  }
  if (j.contains("eps")) ex.epsilons = number_list(j["eps"], "experiment.eps");
  if (j.contains("horizons")) {
    ex.horizons.clear();
    for (double v : number_list(j["horizons"], "experiment.horizons")) ex.horizons.push_back(static_cast<int>(v));
  }
  if (j.contains("lyapunov")) ex.lyapunov = parse_lyapunov_variant(get<std::string>(j, "lyapunov", "experiment"));
  if (j.contains("w_tolerance")) ex.w_tolerance = get<double>(j, "w_tolerance", "experiment");
}

void parse_solver(const json& j, OcpOptions& s) {
  reject_unknown(j, "solver", {"feasibility_tol", "stationarity_tol", "max_outer", "max_inner",
                               "initial_penalty", "penalty_growth", "accept_violation", "restarts",
                               "seed"});
  if (j.contains("feasibility_tol")) s.al.feasibility_tol = get<double>(j, "feasibility_tol", "solver");
  if (j.contains("stationarity_tol")) s.al.stationarity_tol = get<double>(j, "stationarity_tol", "solver");
  if (j.contains("max_outer")) s.al.max_outer = get<int>(j, "max_outer", "solver");
  if (j.contains("max_inner")) s.al.max_inner = get<int>(j, "max_inner", "solver");
  if (j.contains("initial_penalty")) s.al.initial_penalty = get<double>(j, "initial_penalty", "solver");
  if (j.contains("penalty_growth")) s.al.penalty_growth = get<double>(j, "penalty_growth", "solver");
  if (j.contains("accept_violation")) s.accept_violation = get<double>(j, "accept_violation", "solver");
  if (j.contains("restarts")) s.restarts = get<bool>(j, "restarts", "solver");
  if (j.contains("seed")) s.seed = get<unsigned>(j, "seed", "solver");
}

void validate(const RunConfig& rc) {
  const ModelDefinition& md = rc.model;
  const ExperimentConfig& ex = rc.experiment;
  if (md.n < 1 || md.m < 1 || md.p < 1) throw ConfigError("model dimensions must be positive");
  if (static_cast<int>(md.f.size()) != md.n) throw ConfigError("model.f needs n expressions");
  if (static_cast<int>(md.h.size()) != md.p) throw ConfigError("model.h needs p expressions");
  if (static_cast<int>(md.x_lower.size()) != md.n || static_cast<int>(md.x_upper.size()) != md.n)
    throw ConfigError("state bounds need n entries");
  if (static_cast<int>(md.u_lower.size()) != md.m || static_cast<int>(md.u_upper.size()) != md.m)
    throw ConfigError("input bounds need m entries");
  if (static_cast<int>(md.lambda_bar.size()) != md.p) throw ConfigError("lambda_bar needs p entries");
  for (int i = 0; i < md.n; ++i)
    if (!(md.x_lower[static_cast<std::size_t>(i)] <= md.x_upper[static_cast<std::size_t>(i)]))
      throw ConfigError("state bounds are crossed");
  for (int i = 0; i < md.m; ++i)
    if (!(md.u_lower[static_cast<std::size_t>(i)] <= md.u_upper[static_cast<std::size_t>(i)]))
      throw ConfigError("input bounds are crossed");
  if (ex.period < 1) throw ConfigError("experiment.T must be >= 1");
  if (ex.horizon < ex.period) throw ConfigError("experiment.N must be >= experiment.T");
  if (ex.steps < 1) throw ConfigError("experiment.K must be >= 1");
  if (static_cast<int>(ex.x0.size()) != md.n) throw ConfigError("experiment.x0 needs n entries");
  for (double e : ex.epsilons)
    if (!(e > 0.0)) throw ConfigError("experiment.eps entries must be positive");
  for (int n : ex.horizons)
    if (n < ex.period) throw ConfigError("experiment.horizons entries must be >= T");
  const auto& s = rc.solver.al;
  if (!(s.feasibility_tol > 0.0) || !(s.stationarity_tol > 0.0)) throw ConfigError("solver tolerances must be positive");
  if (s.max_outer < 1 || s.max_inner < 1) throw ConfigError("solver iteration caps must be positive");
  if (!(s.initial_penalty > 0.0) || !(s.penalty_growth > 1.0)) throw ConfigError("invalid penalty schedule");
}

std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth < 0) throw ConfigError("unbalanced parentheses in history \"" + s + "\"");
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur += c;
    }
  }
  if (depth != 0) throw ConfigError("unbalanced parentheses in history \"" + s + "\"");
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("cannot read number \"" + s + "\" in " + context);
  return v;
}

// "(a,b,...)" -> h(x, u)
Vector output_at(const std::string& args, const SystemModel& model, const std::string& context) {
  if (args.size() < 2 || args.front() != '(' || args.back() != ')')
    throw ConfigError("expected (x.., u..) in history item \"" + context + "\"");
  std::vector<double> v;
  for (const std::string& tok : split_top_level(args.substr(1, args.size() - 2)))
    v.push_back(parse_number(tok, context));
  if (static_cast<int>(v.size()) != model.n() + model.m())
    throw ConfigError("history item \"" + context + "\" needs n + m arguments");
  const Vector z = to_vector(v);
  const Vector x = z.head(model.n()), u = z.tail(model.m());
  if (!model.in_z(x, u)) throw ConfigError("history item \"" + context + "\" lies outside Z");
  return model.h(x, u);
}

}  // namespace

ModelDefinition builtin_model_definition(const std::string& name) {
  if (name != kBuiltinName) throw ConfigError("unknown built-in model \"" + name + "\"");
  ModelDefinition md;
  md.name = name;
  md.n = md.m = md.p = 1;
  md.f = {"x1*u1"};
  md.ell = "(x1-3)^2 + u1^2";
  md.h = {"2*x1 + u1 - 5"};
  md.lambda = "1.5*(x1-2)";
  md.x_lower = {-10.0};
  md.x_upper = {10.0};
  md.u_lower = {-10.0};
  md.u_upper = {10.0};
  md.lambda_bar = {1.0};
  md.a = 0.25;
  md.omega = 2.0;
  md.lipschitz_h = 3.0;
  return md;
}

SystemModel ModelDefinition::build_model() const {
  if (!name.empty() && *this == builtin_model_definition(name)) return scalar_example_model();
  return SystemModel::from_expressions(n, m, p, f, ell, h, Box(to_vector(x_lower), to_vector(x_upper)),
                                       Box(to_vector(u_lower), to_vector(u_upper)));
}

DissipativityCertificate ModelDefinition::build_certificate() const {
  return DissipativityCertificate(StorageFunction::from_expression(n, lambda), to_vector(lambda_bar), a,
                                  omega, lipschitz_h);
}

RunConfig default_run_config() {
  RunConfig rc;
  rc.model = builtin_model_definition(kBuiltinName);
  return rc;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  reject_unknown(j, "top level", {"model", "experiment", "solver", "output"});
  RunConfig rc = default_run_config();
  if (j.contains("model")) parse_model(j["model"], rc.model);
  if (j.contains("experiment")) parse_experiment(j["experiment"], rc.experiment);
  if (j.contains("solver")) parse_solver(j["solver"], rc.solver);
  if (j.contains("output")) {
    const json& o = j["output"];
    reject_unknown(o, "output", {"dir", "svg"});
    if (o.contains("dir")) rc.output.dir = get<std::string>(o, "dir", "output");
    if (o.contains("svg")) rc.output.svg = get<bool>(o, "svg", "output");
  }
  validate(rc);
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file \"" + path + "\"");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

HistoryState resolve_history(const std::string& text, const EconomicSetup& setup, int period) {
  const SystemModel& model = setup.model();
  const int p = model.p();
  std::string trimmed;
  for (char c : text)
    if (c != ' ' && c != '\t') trimmed += c;
  if (trimmed == "steady") return setup.steady_state().history(period);
  if (trimmed.starts_with("constant:")) {
    const Vector h = output_at(trimmed.substr(9), model, trimmed);
    return HistoryState::constant(period, h);
  }
  std::vector<double> flat;
  if (!trimmed.empty()) {
    for (const std::string& item : split_top_level(trimmed)) {
      std::string body = item;
      int count = 1;
      const std::size_t star = item.rfind('*');
      if (star != std::string::npos && item.find(')', star) == std::string::npos) {
        body = item.substr(0, star);
        const double c = parse_number(item.substr(star + 1), item);
        if (c < 1 || c != static_cast<int>(c)) throw ConfigError("repeat count must be a positive integer in \"" + item + "\"");
        count = static_cast<int>(c);
      }
      std::vector<double> values;
      if (body.starts_with("h(")) {
        const Vector h = output_at(body.substr(1), model, item);
        values.assign(h.data(), h.data() + h.size());
      } else {
        values.push_back(parse_number(body, item));
      }
      for (int r = 0; r < count; ++r) flat.insert(flat.end(), values.begin(), values.end());
    }
  }
  if (flat.size() != static_cast<std::size_t>(period - 1) * static_cast<std::size_t>(p))
    throw ConfigError("history \"" + text + "\" gives " + std::to_string(flat.size()) + " values, expected (T-1)*p = " +
                      std::to_string((period - 1) * p));
  return HistoryState::from_flat(period, p, flat);
}

LyapunovVariant parse_lyapunov_variant(const std::string& s) {
  if (s == "certified") return LyapunovVariant::kCertified;
  if (s == "successor-history") return LyapunovVariant::kSuccessorHistory;
  throw ConfigError("unknown Lyapunov variant \"" + s + "\" (use certified or successor-history)");
}

std::string to_string(LyapunovVariant v) {
  return v == LyapunovVariant::kCertified ? "certified" : "successor-history";
}

}  // namespace avgmpc
