// avgmpc: steady state, closed-loop simulation, turnpike statistics and the
// acceptance suite from the command line.

#include "avgmpc/acceptance.hpp"
#include "avgmpc/config.hpp"
#include "avgmpc/trace_io.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace avgmpc;

namespace {

struct CommonFlags {
  std::string config;
  std::string model;
  std::optional<int> N, T, K;
  std::string x0;
  std::string history;
  std::string out;
  bool svg = false;
  std::optional<unsigned> seed;
};

void add_model_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--model", f.model, "built-in model name (scalar-example)");
}

void add_experiment_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--N", f.N, "prediction horizon");
  cmd->add_option("--T", f.T, "averaging period");
  cmd->add_option("--x0", f.x0, "initial state, comma separated");
  cmd->add_option("--history", f.history, "initial history, e.g. steady, constant:(1,1), h(1,1)*4,h(1,2)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "seed of the randomized restart");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0) throw ConfigError("cannot read number \"" + tok + "\"");
    out.push_back(v);
  }
  return out;
}

RunConfig load(const CommonFlags& f) {
  RunConfig rc = f.config.empty() ? default_run_config() : load_run_config(f.config);
  if (!f.model.empty()) rc.model = builtin_model_definition(f.model);
  if (f.N) rc.experiment.horizon = *f.N;
  if (f.T) rc.experiment.period = *f.T;
  if (f.K) rc.experiment.steps = *f.K;
  if (!f.x0.empty()) rc.experiment.x0 = parse_list(f.x0);
  if (!f.history.empty()) rc.experiment.history = f.history;
  if (!f.out.empty()) rc.output.dir = f.out;
  if (f.svg) rc.output.svg = true;
  if (f.seed) rc.solver.seed = *f.seed;
  if (rc.experiment.period < 1) throw ConfigError("T must be >= 1");
  if (rc.experiment.horizon < rc.experiment.period) throw ConfigError("N must be >= T");
  if (rc.experiment.steps < 1) throw ConfigError("K must be >= 1");
  if (static_cast<int>(rc.experiment.x0.size()) != rc.model.n) throw ConfigError("x0 needs n entries");
  return rc;
}

std::shared_ptr<const EconomicSetup> build_setup(const RunConfig& rc) {
  SetupOptions so;
  so.steady_state.enforce_output_constraint = rc.model.enforce_output_constraint;
  return EconomicSetup::create(rc.model.build_model(), rc.model.build_certificate(), so);
}

std::string vec(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_csv_number(v[i]);
  return s + ")";
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

int run_steady_state(const CommonFlags& f) {
  const RunConfig rc = load(f);
  SteadyStateOptions so;
  so.enforce_output_constraint = rc.model.enforce_output_constraint;
  const SystemModel model = rc.model.build_model();
  const SteadyState ss = solve_steady_state(model, so);
  std::printf("x_s   = %s\nu_s   = %s\nell_s = %s\nh_s   = %s\n", vec(ss.x).c_str(), vec(ss.u).c_str(),
              format_csv_number(ss.ell).c_str(), vec(ss.h).c_str());
  return 0;
}

void write_trace_files(const RunConfig& rc, const ClosedLoopTrace& trace, const LyapunovTrace* lt) {
  auto csv = open_output(rc.output.dir, "trace.csv");
  write_trace_csv(csv, trace, lt);
  auto hist = open_output(rc.output.dir, "history.csv");
  write_history_csv(hist, trace);
}

int run_simulate(const CommonFlags& f) {
  const RunConfig rc = load(f);
  const auto setup = build_setup(rc);
  const ExperimentConfig& ex = rc.experiment;
  const HistoryState H0 = resolve_history(ex.history, *setup, ex.period);
  const Vector x0 = Eigen::Map<const Vector>(ex.x0.data(), static_cast<Eigen::Index>(ex.x0.size()));
  ClosedLoopOptions clo;
  clo.ocp = rc.solver;

  ClosedLoopTrace trace;
  try {
    trace = simulate(setup, ex.horizon, x0, H0, ex.steps, clo);
  } catch (const SimulationHalted& e) {
    write_trace_files(rc, e.partial_trace(), nullptr);
    std::cerr << "error: " << e.what() << "\npartial trace written to " << rc.output.dir << '\n';
    return 2;
  }

  std::optional<LyapunovTrace> lt;
  if (ex.period >= 2 && static_cast<int>(trace.rows.size()) >= ex.period) {
    lt = lyapunov_trace(trace, *setup, ex.lyapunov);
  } else {
    std::cerr << "note: Lyapunov function requires T >= 2 and K >= T; What and W left empty\n";
  }
  write_trace_files(rc, trace, lt ? &*lt : nullptr);
  const PerformanceResidual pr = performance_residual(trace);
  {
    auto perf = open_output(rc.output.dir, "performance.csv");
    write_performance_csv(perf, pr);
  }
  if (rc.output.svg) {
    std::vector<PlotSeries> series;
    PlotSeries jt{"rotated value function", {}};
    for (const TraceRow& r : trace.rows) jt.values.push_back(r.J_tilde_star);
    series.push_back(std::move(jt));
    if (lt) series.push_back({"W (" + to_string(lt->variant) + ")", lt->W});
    auto svg = open_output(rc.output.dir, "chart.svg");
    write_svg_chart(svg, "closed loop, N = " + std::to_string(ex.horizon) + ", T = " + std::to_string(ex.period),
                    series);
  }

  std::printf("steps %zu, N %d, T %d\n", trace.rows.size(), ex.horizon, ex.period);
  std::printf("x(K) = %s, J_cl = %s\n", vec(trace.x_final).c_str(), format_csv_number(trace.rows.back().J_cl).c_str());
  std::printf("max window sum %s\n", format_csv_number(max_window_sum(trace)).c_str());
  if (lt) {
    const DecreaseCheck d = w_decrease_check(*lt, ex.w_tolerance);
    std::printf("W(0) = %s (%s, c = %s), max increase %s -> %s\n", format_csv_number(lt->W.front()).c_str(),
                to_string(lt->variant).c_str(), format_csv_number(lt->c).c_str(),
                format_csv_number(d.max_increase).c_str(), d.pass ? "decreasing" : "NOT decreasing");
  }
  if (!pr.K.empty())
    std::printf("performance residual r(K)/K at K = %d: %s (rotated, psi-uncorrected: %s)\n", pr.K.back(),
                format_csv_number(pr.r_per_step.back()).c_str(), format_csv_number(pr.rotated_per_step.back()).c_str());
  std::printf("wrote %s\n", rc.output.dir.c_str());
  return 0;
}

int run_turnpike(const CommonFlags& f, std::vector<int> horizons, std::vector<double> eps) {
  RunConfig rc = load(f);
  const auto setup = build_setup(rc);
  const ExperimentConfig& ex = rc.experiment;
  if (horizons.empty()) horizons = f.N ? std::vector<int>{*f.N} : ex.horizons;
  if (eps.empty()) eps = ex.epsilons;
  for (int N : horizons)
    if (N < ex.period) throw ConfigError("N must be >= T");
  const HistoryState H0 = resolve_history(ex.history, *setup, ex.period);
  const Vector x0 = Eigen::Map<const Vector>(ex.x0.data(), static_cast<Eigen::Index>(ex.x0.size()));

  std::vector<std::future<OcpSolution>> pending;
  for (int N : horizons) {
    pending.push_back(std::async(std::launch::async, [&, N] {
      OcpSpec spec;
      spec.setup = setup;
      spec.horizon = N;
      spec.period = ex.period;
      spec.x0 = x0;
      spec.history = H0;
      return solve(spec, rc.solver);
    }));
  }
  auto csv = open_output(rc.output.dir, "turnpike.csv");
  csv << "N,T,eps,Q,consecutive,delta,C,C_prime,count_bound_rhs,count_bound_holds,converged\n";
  std::printf("%4s %3s %8s %4s %-28s %12s %12s %8s\n", "N", "T", "eps", "Q", "consecutive set", "delta",
              "bound rhs", "holds");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const OcpSolution sol = pending[i].get();
    for (double e : eps) {
      const TurnpikeReport r = turnpike_report(sol, *setup, ex.period, e);
      std::string cons;
      for (int k : r.consecutive_set) cons += (cons.empty() ? "" : " ") + std::to_string(k);
      std::printf("%4d %3d %8.4g %4d %-28s %12.6g %12.6g %8s\n", horizons[i], ex.period, e, r.Q,
                  cons.empty() ? "-" : cons.c_str(), r.delta, r.count_bound_rhs, r.count_bound_holds ? "yes" : "NO");
      csv << horizons[i] << ',' << ex.period << ',' << format_csv_number(e) << ',' << r.Q << ",\"" << cons << "\","
          << format_csv_number(r.delta) << ',' << format_csv_number(r.C) << ',' << format_csv_number(r.C_prime)
          << ',' << format_csv_number(r.count_bound_rhs) << ',' << (r.count_bound_holds ? 1 : 0) << ','
          << (sol.converged ? 1 : 0) << '\n';
    }
  }
  return 0;
}

int run_check(const CommonFlags& f, int lyapunov_period) {
  AcceptanceOptions opt;
  if (!f.config.empty() || !f.model.empty()) {
    const RunConfig rc = load(f);
    opt.model = rc.model;
    opt.solver = rc.solver;
  }
  if (f.seed) opt.seed = *f.seed;
  opt.lyapunov_period = lyapunov_period;
  const AcceptanceReport report = run_acceptance(opt);
  print_acceptance(std::cout, report);
  const bool ok = report.all_pass();
  std::cout << (ok ? "all criteria passed\n" : "some criteria FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Economic MPC with transient average constraints"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* steady = app.add_subcommand("steady-state", "compute the optimal steady state");
  add_model_flags(steady, flags);

  auto* sim = app.add_subcommand("simulate", "run the closed loop and write trace.csv");
  add_model_flags(sim, flags);
  add_experiment_flags(sim, flags);
  sim->add_option("--K", flags.K, "closed-loop steps");
  sim->add_flag("--svg", flags.svg, "also write chart.svg");

  std::vector<int> horizons;
  std::vector<double> eps;
  auto* tp = app.add_subcommand("turnpike", "turnpike statistics of open-loop solutions");
  add_model_flags(tp, flags);
  tp->add_option("--N", horizons, "one or more horizons");
  tp->add_option("--T", flags.T, "averaging period");
  tp->add_option("--x0", flags.x0, "initial state, comma separated");
  tp->add_option("--history", flags.history, "initial history");
  tp->add_option("--eps", eps, "one or more neighbourhood radii");
  tp->add_option("--out", flags.out, "output directory");
  tp->add_option("--seed", flags.seed, "seed of the randomized restart");

  int lyapunov_period = 6;
  auto* check = app.add_subcommand("check", "run the acceptance suite");
  add_model_flags(check, flags);
  check->add_option("--seed", flags.seed, "seed of the randomized samples");
  check->add_option("--lyapunov-T", lyapunov_period, "period for the Lyapunov sub-checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*steady) return run_steady_state(flags);
    if (*sim) return run_simulate(flags);
    if (*tp) return run_turnpike(flags, horizons, eps);
    if (*check) return run_check(flags, lyapunov_period);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 1;
  } catch (const expr::ParseError& e) {
    std::cerr << "expression error at offset " << e.position() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
