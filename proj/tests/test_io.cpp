#include "avgmpc/config.hpp"
#include "avgmpc/trace_io.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace avgmpc;
using Catch::Approx;
using oracle::scalar;

namespace {

const ClosedLoopTrace& short_trace() {
  static const ClosedLoopTrace trace = simulate(
      oracle::example_setup(), 8, scalar(2.0), HistoryState(3, 1, {scalar(-2), scalar(-1)}), 6);
  return trace;
}

}  // namespace

TEST_CASE("trace header") {
  const std::vector<std::string> expected{"k", "x_1", "u_1", "h_1", "ell", "Jstar", "Jtildestar", "Hnorm", "What", "W"};
  CHECK(trace_csv_header(1, 1, 1) == expected);
  CHECK(trace_csv_header(2, 1, 3).size() == 1 + 2 + 1 + 3 + 6);
}

TEST_CASE("trace CSV contents") {
  const auto& setup = *oracle::example_setup();
  const LyapunovTrace lt = lyapunov_trace(short_trace(), setup);
  std::stringstream ss;
  write_trace_csv(ss, short_trace(), &lt);
  const CsvTable table = read_csv(ss);
  CHECK(table.header == trace_csv_header(1, 1, 1));
  REQUIRE(table.rows.size() == short_trace().rows.size());
  const std::size_t w = table.column("W");
  const std::size_t x = table.column("x_1");
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    CHECK(*table.rows[k][0] == static_cast<double>(k));
    CHECK(*table.rows[k][x] == Approx(short_trace().rows[k].x[0]).epsilon(1e-11));
    CHECK(table.rows[k][w].has_value() == (k < lt.W.size()));
  }
  CHECK(*table.rows[0][w] == Approx(lt.W[0]).epsilon(1e-11));
  CHECK_THROWS_AS(table.column("missing"), ConfigError);
}

TEST_CASE("trace CSV round trip is textually stable") {
  std::stringstream first;
  write_trace_csv(first, short_trace());
  const std::string text = first.str();
  std::stringstream in(text);
  const CsvTable table = read_csv(in);
  std::ostringstream again;
  for (std::size_t i = 0; i < table.header.size(); ++i) again << (i ? "," : "") << table.header[i];
  again << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) again << (i ? "," : "") << (row[i] ? format_csv_number(*row[i]) : "");
    again << '\n';
  }
  CHECK(again.str() == text);
}

TEST_CASE("history and performance CSV") {
  std::stringstream hs;
  write_history_csv(hs, short_trace());
  const CsvTable h = read_csv(hs);
  CHECK(h.header == std::vector<std::string>{"k", "H_1_1", "H_2_1"});
  CHECK(*h.rows[0][1] == -2.0);
  CHECK(*h.rows[0][2] == -1.0);

  std::stringstream ps;
  write_performance_csv(ps, performance_residual(short_trace()));
  const CsvTable p = read_csv(ps);
  CHECK(p.header == std::vector<std::string>{"K", "r", "r_per_step", "rotated", "rotated_per_step"});
  CHECK(p.rows.size() == short_trace().rows.size() - 1);
}

TEST_CASE("malformed CSV is rejected") {
  std::stringstream bad("a,b\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(bad), ConfigError);
  std::stringstream text("a,b\n1,oops\n");
  CHECK_THROWS_AS(read_csv(text), ConfigError);
}

TEST_CASE("SVG chart is well formed") {
  std::ostringstream out;
  write_svg_chart(out, "J & W", {{"Jtilde", {1.0, 0.5, std::nan(""), 0.1}}, {"W", {2.0, 1.0, 0.5, 0.2}}});
  const std::string svg = out.str();
  CHECK(svg.starts_with("<?xml"));
  CHECK(svg.find("<svg xmlns") != std::string::npos);
  CHECK(svg.find("viewBox") != std::string::npos);
  CHECK(svg.find("J &amp; W") != std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++polylines;
  CHECK(polylines == 2);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("default configuration") {
  const RunConfig cfg = default_run_config();
  CHECK(cfg.model == builtin_model_definition("scalar-example"));
  CHECK(cfg.experiment.horizon == 12);
  CHECK(cfg.experiment.period == 6);
  CHECK(cfg.experiment.steps == 30);
  CHECK(cfg.experiment.lyapunov == LyapunovVariant::kSuccessorHistory);
  CHECK(cfg.solver.al.max_outer == 10);
  CHECK(cfg.solver.al.max_inner == 500);
}

TEST_CASE("JSON configuration overrides") {
  const RunConfig cfg = parse_run_config(R"({
    "model": {"name": "scalar-example", "a": 0.2},
    "experiment": {"N": 10, "T": 3, "K": 5, "x0": 1.5, "history": [-2, [-1]], "eps": [0.05, 0.1],
                   "lyapunov": "certified"},
    "solver": {"max_outer": 12, "seed": 4},
    "output": {"dir": "out", "svg": true}
  })");
  CHECK(cfg.model.a == 0.2);
  CHECK(cfg.model.name == "scalar-example");
  CHECK(cfg.experiment.horizon == 10);
  CHECK(cfg.experiment.x0 == std::vector<double>{1.5});
  CHECK(cfg.experiment.history == "-2,-1");
  CHECK(cfg.experiment.epsilons.size() == 2);
  CHECK(cfg.experiment.lyapunov == LyapunovVariant::kCertified);
  CHECK(cfg.solver.al.max_outer == 12);
  CHECK(cfg.solver.seed == 4);
  CHECK(cfg.output.dir == "out");
  CHECK(cfg.output.svg);
}

TEST_CASE("invalid JSON configurations") {
  CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"colour": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"extra": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiment": {"N": 4, "T": 6}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"name": "other"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"model": {"name": "scalar-example", "x_lower": [1], "x_upper": [0]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"experiment": {"lyapunov": "fast"}})"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("custom model from expressions") {
  const RunConfig cfg = parse_run_config(R"j({"model": {
    "n": 1, "m": 1, "p": 1, "f": ["x1*u1"], "ell": "(x1-3)^2 + u1^2", "h": ["2*x1 + u1 - 5"],
    "lambda": "1.5*(x1-2)", "x_lower": [-10], "x_upper": [10], "u_lower": [-10], "u_upper": [10],
    "lambda_bar": [1], "a": 0.25, "omega": 2, "L_h": 3}})j");
  CHECK(cfg.model.name.empty());
  const auto setup = EconomicSetup::create(cfg.model.build_model(), cfg.model.build_certificate());
  CHECK(setup->steady_state().x[0] == Approx(2.0).margin(1e-6));
  CHECK(setup->extremes().theta_low == Approx(-35.0));
}

TEST_CASE("history shorthand") {
  const auto& setup = *oracle::example_setup();
  const HistoryState H = resolve_history("h(1,1)*4,h(1,2)", setup, 6);
  REQUIRE(H.size() == 5);
  for (int j = 0; j < 4; ++j) CHECK(H.column(j)[0] == Approx(-2.0));
  CHECK(H.column(4)[0] == Approx(-1.0));
  CHECK(resolve_history("steady", setup, 4) == HistoryState::constant(4, setup.steady_state().h));
  CHECK(resolve_history("constant:(1,1)", setup, 3) == HistoryState(3, 1, {scalar(-2), scalar(-2)}));
  CHECK(resolve_history("-1,0.5", setup, 3) == HistoryState(3, 1, {scalar(-1), scalar(0.5)}));
  CHECK(resolve_history("steady", setup, 1).empty());
  CHECK_THROWS_AS(resolve_history("h(1,1)*3", setup, 6), ConfigError);
  CHECK_THROWS_AS(resolve_history("h(1)", setup, 2), ConfigError);
  CHECK_THROWS_AS(resolve_history("h(11,1)", setup, 2), ConfigError);
  CHECK_THROWS_AS(resolve_history("h(1,1", setup, 2), ConfigError);
  CHECK_THROWS_AS(resolve_history("abc", setup, 2), ConfigError);
  CHECK_THROWS_AS(resolve_history("h(1,1)*0", setup, 2), ConfigError);
}

TEST_CASE("Lyapunov variant names") {
  for (LyapunovVariant v : {LyapunovVariant::kCertified, LyapunovVariant::kSuccessorHistory})
    CHECK(parse_lyapunov_variant(to_string(v)) == v);
}
