#include "avgmpc/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace avgmpc {

std::string format_csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<std::string> trace_csv_header(int n, int m, int p) {
  std::vector<std::string> h{"k"};
  for (int i = 1; i <= n; ++i) h.push_back("x_" + std::to_string(i));
  for (int i = 1; i <= m; ++i) h.push_back("u_" + std::to_string(i));
  for (int i = 1; i <= p; ++i) h.push_back("h_" + std::to_string(i));
  for (const char* s : {"ell", "Jstar", "Jtildestar", "Hnorm", "What", "W"}) h.emplace_back(s);
  return h;
}

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace

void write_trace_csv(std::ostream& out, const ClosedLoopTrace& trace, const LyapunovTrace* lt) {
  if (trace.rows.empty()) {
    write_row(out, trace_csv_header(0, 0, 0));
    return;
  }
  const TraceRow& first = trace.rows.front();
  write_row(out, trace_csv_header(static_cast<int>(first.x.size()), static_cast<int>(first.u.size()),
                                  static_cast<int>(first.h.size())));
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    const TraceRow& r = trace.rows[k];
    std::vector<std::string> cells{std::to_string(r.k)};
    for (const Vector* v : {&r.x, &r.u, &r.h})
      for (Eigen::Index i = 0; i < v->size(); ++i) cells.push_back(format_csv_number((*v)[i]));
    cells.push_back(format_csv_number(r.ell));
    cells.push_back(format_csv_number(r.J_star));
    cells.push_back(format_csv_number(r.J_tilde_star));
    cells.push_back(format_csv_number(r.history_norm));
    cells.push_back(lt && k < lt->W_hat.size() ? format_csv_number(lt->W_hat[k]) : "");
    cells.push_back(lt && k < lt->W.size() ? format_csv_number(lt->W[k]) : "");
    write_row(out, cells);
  }
}

void write_history_csv(std::ostream& out, const ClosedLoopTrace& trace) {
  std::vector<std::string> header{"k"};
  if (!trace.rows.empty()) {
    const HistoryState& H = trace.rows.front().history;
    for (int j = 1; j <= H.size(); ++j)
      for (int i = 1; i <= H.output_dim(); ++i) header.push_back("H_" + std::to_string(j) + "_" + std::to_string(i));
  }
  write_row(out, header);
  for (const TraceRow& r : trace.rows) {
    std::vector<std::string> cells{std::to_string(r.k)};
    for (double v : r.history.flatten()) cells.push_back(format_csv_number(v));
    write_row(out, cells);
  }
}

void write_performance_csv(std::ostream& out, const PerformanceResidual& pr) {
  write_row(out, {"K", "r", "r_per_step", "rotated", "rotated_per_step"});
  for (std::size_t i = 0; i < pr.K.size(); ++i)
    write_row(out, {std::to_string(pr.K[i]), format_csv_number(pr.r[i]), format_csv_number(pr.r_per_step[i]),
                    format_csv_number(pr.rotated[i]), format_csv_number(pr.rotated_per_step[i])});
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("CSV has no column \"" + name + "\"");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size()) throw ConfigError("CSV row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(t.header.size()));
    std::vector<std::optional<double>> row;
    for (const std::string& c : cells) {
      if (c.empty()) {
        row.emplace_back();
        continue;
      }
      double v = 0.0;
      const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || end != c.data() + c.size()) throw ConfigError("malformed CSV number \"" + c + "\"");
      row.emplace_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kColors[] = {"#0072bd", "#d95319", "#edb120", "#7e2f8e", "#77ac30", "#4dbeee"};

}  // namespace

void write_svg_chart(std::ostream& out, const std::string& title, const std::vector<PlotSeries>& series) {
  constexpr double kWidth = 800, kHeight = 480;
  constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  std::size_t count = 0;
  for (const PlotSeries& s : series) {
    count = std::max(count, s.values.size());
    for (double v : s.values)
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
  }
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (ymax - ymin < 1e-300) ymax = ymin + 1.0;
  const double xmax = count > 1 ? static_cast<double>(count - 1) : 1.0;
  const auto px = [&](double k) { return kLeft + k / xmax * (kWidth - kLeft - kRight); };
  const auto py = [&](double v) { return kHeight - kBottom - (v - ymin) / (ymax - ymin) * (kHeight - kTop - kBottom); };

  char buf[64];
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"480\" viewBox=\"0 0 800 480\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"480\" fill=\"white\"/>\n";
  out << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(title) << "</text>\n";
  out << "<g stroke=\"black\" stroke-width=\"1\">\n";
  std::snprintf(buf, sizeof buf, "%.2f", kHeight - kBottom);
  out << "<line x1=\"" << kLeft << "\" y1=\"" << buf << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << buf << "\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << buf << "\"/>\n";
  out << "</g>\n";
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = ymin + (ymax - ymin) * t / 4.0;
    std::snprintf(buf, sizeof buf, "%.4g", v);
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << format_csv_number(py(v) + 4) << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double k = xmax * t / 4.0;
    std::snprintf(buf, sizeof buf, "%.3g", k);
    out << "<text x=\"" << format_csv_number(px(k)) << "\" y=\"" << kHeight - kBottom + 18 << "\" text-anchor=\"middle\">" << buf << "</text>\n";
  }
  out << "<text x=\"400\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">k</text>\n";
  out << "</g>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t k = 0; k < series[s].values.size(); ++k) {
      const double v = series[s].values[k];
      if (!std::isfinite(v)) continue;
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", first ? "" : " ", px(static_cast<double>(k)), py(v));
      out << buf;
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kRight - 150 << "\" y=\"" << kTop + 16 * (s + 1)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">" << xml_escape(series[s].name)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace avgmpc
