#pragma once

// CSV and SVG output of closed-loop traces.

#include "avgmpc/closedloop.hpp"
#include "avgmpc/diagnostics.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace avgmpc {

/// k, x_1..x_n, u_1..u_m, h_1..h_p, ell, Jstar, Jtildestar, Hnorm, What, W
std::vector<std::string> trace_csv_header(int n, int m, int p);

/// Numbers use 12 significant digits. What and W are left empty where they
/// are undefined (no Lyapunov trace, or the final T-1 rows for W).
void write_trace_csv(std::ostream& out, const ClosedLoopTrace& trace, const LyapunovTrace* lt = nullptr);

/// k followed by H_j_i (column j oldest first, component i) for H(k).
void write_history_csv(std::ostream& out, const ClosedLoopTrace& trace);

/// K, r, r_per_step, rotated, rotated_per_step (rotated without the psi term).
void write_performance_csv(std::ostream& out, const PerformanceResidual& pr);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;  // empty cells are nullopt

  /// Index of `name` in the header; throws ConfigError if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);

std::string format_csv_number(double v);

struct PlotSeries {
  std::string name;
  std::vector<double> values;  // NaN entries are skipped
};

/// 800 x 480 SVG line chart, one polyline per series, x axis = index.
void write_svg_chart(std::ostream& out, const std::string& title, const std::vector<PlotSeries>& series);

}  // namespace avgmpc
