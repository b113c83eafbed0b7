// SPDX-License-Identifier: Apache-2.0
//
// Standard experiment sweeps and their serialization: rotation and lateral
// misalignment sweeps over the four baseline systems, the brute-force
// current-ratio oracle, tracking run logs, CSV round-tripping and a minimal
// SVG line plot.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "omniwpt/circuit.hpp"
#include "omniwpt/common.hpp"
#include "omniwpt/controlloop.hpp"
#include "omniwpt/scenario.hpp"

namespace omniwpt {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void push_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    rows.push_back(std::move(cells));
  }

  // 12 significant digits: enough for lossless re-parsing at test tolerance.
  static std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
  }
};

// Axis tilt sweep from +z toward +x at the scenario's receiver position.
inline Table run_rotation_sweep(const ScenarioConfig& cfg, int steps) {
  if (steps < 2) throw DomainError("run_rotation_sweep: need at least 2 steps");
  std::vector<Pose> poses(steps);
  std::vector<double> angles(steps);
  for (int i = 0; i < steps; ++i) {
    angles[i] = 90.0 * i / (steps - 1);
    const double a = angles[i] * kPi / 180.0;
    poses[i].position_mm = cfg.receiver.pose.position_mm;
    poses[i].axis = Vec3(std::sin(a), 0.0, std::cos(a));
  }
  const auto baselines = compare_baselines(cfg, poses);
  Table t;
  t.header = {"angle_deg", "pte_single_small", "pte_single_large", "pte_fixed3",
              "pte_ae3"};
  for (int i = 0; i < steps; ++i)
    t.push_row({angles[i], baselines[i].single_small, baselines[i].single_large,
                baselines[i].three_fixed, baselines[i].three_ae});
  return t;
}

// Lateral offset sweep along the standard measurement path
// (-20, 10, 20) mm -> (20, 10, 20) mm with the implant axis on +z.
inline Table run_lateral_sweep(const ScenarioConfig& cfg, int steps) {
  if (steps < 2) throw DomainError("run_lateral_sweep: need at least 2 steps");
  std::vector<Pose> poses(steps);
  std::vector<double> xs(steps);
  for (int i = 0; i < steps; ++i) {
    xs[i] = -20.0 + 40.0 * i / (steps - 1);
    poses[i].position_mm = Vec3(xs[i], 10.0, 20.0);
    poses[i].axis = Vec3::UnitZ();
  }
  const auto baselines = compare_baselines(cfg, poses);
  Table t;
  t.header = {"x_mm", "pte_single_small", "pte_single_large", "pte_fixed3",
              "pte_ae3"};
  for (int i = 0; i < steps; ++i)
    t.push_row({xs[i], baselines[i].single_small, baselines[i].single_large,
                baselines[i].three_fixed, baselines[i].three_ae});
  return t;
}

// Brute-force current-ratio oracle: TX1 off, |I2|:|I3| swept over a log grid,
// both relative polarities evaluated at every ratio.
inline Table run_current_grid(const ScenarioConfig& cfg, const Pose& pose,
                              int steps) {
  if (steps < 2) throw DomainError("run_current_grid: need at least 2 steps");
  if (cfg.coils.size() < 3)
    throw DomainError("run_current_grid: needs a 3-coil scenario, got " +
                      std::to_string(cfg.coils.size()));
  CouplingState cs =
      make_coupling_state(cfg.coils, cfg.receiver, pose, cfg.omega());
  update_rx_coupling(cs, cfg.coils, cfg.receiver, pose);

  Table t;
  t.header = {"log10_ratio", "ratio", "pte_same", "pte_opposite"};
  for (int i = 0; i < steps; ++i) {
    const double lg = -1.0 + 2.0 * i / (steps - 1);
    const double ratio = std::pow(10.0, lg);  // |I2| / |I3|
    const double i3 = std::sqrt(cfg.budget_a2 / (1.0 + ratio * ratio));
    const double i2 = ratio * i3;
    std::vector<Complex> same(cfg.coils.size(), Complex(0.0, 0.0));
    same[1] = Complex(i2, 0.0);
    same[2] = Complex(i3, 0.0);
    std::vector<Complex> opposite = same;
    opposite[2] = -opposite[2];
    t.push_row({lg, ratio, pte(cs, same), pte(cs, opposite)});
  }
  return t;
}

// Flatten a tracking run into the standard log columns.
inline Table run_log_table(const ScenarioConfig& cfg, const TrackingResult& result) {
  Table t;
  t.header = {"t_s", "phase"};
  const std::size_t n = cfg.coils.size();
  for (std::size_t i = 1; i <= n; ++i)
    t.header.push_back("current_A_" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i)
    t.header.push_back("duty_" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i)
    t.header.push_back("polarity_" + std::to_string(i));
  t.header.push_back("pte");
  t.header.push_back("cumulative_delivered_J");
  for (const auto& row : result.rows) {
    std::vector<std::string> cells;
    cells.push_back(Table::format_number(row.t_s));
    cells.push_back(phase_name(row.phase));
    for (double v : row.current_a) cells.push_back(Table::format_number(v));
    for (double v : row.duty) cells.push_back(Table::format_number(v));
    for (int b : row.polarity_bit) cells.push_back(std::to_string(b));
    cells.push_back(Table::format_number(row.pte));
    cells.push_back(Table::format_number(row.cumulative_delivered_j));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline std::string to_csv(const Table& t) {
  if (t.rows.empty()) throw IoError("to_csv: refusing to serialize an empty table");
  std::ostringstream out;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    out << (i ? ", " : "") << t.header[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? ", " : "") << row[i];
    out << "\n";
  }
  return out.str();
}

inline void write_csv(const Table& t, const std::string& path) {
  const std::string body = to_csv(t);  // empty-table guard fires before open
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_csv: cannot open " + path);
  out << body;
  if (!out) throw IoError("write_csv: failed writing " + path);
}

inline Table parse_csv(const std::string& text) {
  const auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  const auto split = [&](const std::string& line) {
    std::vector<std::string> cells;
    std::istringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    return cells;
  };
  Table t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (t.header.empty())
      t.header = split(line);
    else
      t.rows.push_back(split(line));
  }
  if (t.header.empty()) throw IoError("parse_csv: no header line");
  return t;
}

// Minimal static line plot: first column on x, every further numeric column
// as one polyline series.  Intended for quick visual checks, not publication.
inline std::string to_svg(const Table& t, const std::string& title = {}) {
  if (t.rows.empty()) throw IoError("to_svg: refusing to render an empty table");
  const int w = 800, h = 480, ml = 70, mr = 170, mt = 40, mb = 50;
  const int ncols = static_cast<int>(t.header.size());
  std::vector<std::vector<double>> cols(ncols);
  for (const auto& row : t.rows)
    for (int c = 0; c < ncols; ++c) {
      try {
        cols[c].push_back(std::stod(row.at(c)));
      } catch (...) {
        cols[c].push_back(0.0);  // non-numeric cells plot at zero
      }
    }
  const auto span = [](const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double a = *lo, b = *hi;
    if (a == b) b = a + 1.0;
    return std::pair<double, double>(a, b);
  };
  const auto [x0, x1] = span(cols[0]);
  double y0 = 0.0, y1 = -1e300;
  for (int c = 1; c < ncols; ++c) {
    const auto [a, b] = span(cols[c]);
    y0 = std::min(y0, a);
    y1 = std::max(y1, b);
  }
  if (y1 <= y0) y1 = y0 + 1.0;
  const auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  const auto py = [&](double y) {
    return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb);
  };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
    << "' viewBox='0 0 " << w << " " << h << "'>\n"
    << "<rect width='100%' height='100%' fill='white'/>\n";
  if (!title.empty())
    s << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>"
      << title << "</text>\n";
  s << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
    << h - mb << "' stroke='black'/>\n"
    << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
    << "' stroke='black'/>\n"
    << "<text x='" << ml << "' y='" << h - mb + 20 << "' font-size='12'>"
    << Table::format_number(x0) << "</text>\n"
    << "<text x='" << w - mr << "' y='" << h - mb + 20
    << "' text-anchor='end' font-size='12'>" << Table::format_number(x1)
    << "</text>\n"
    << "<text x='" << ml - 6 << "' y='" << h - mb
    << "' text-anchor='end' font-size='12'>" << Table::format_number(y0)
    << "</text>\n"
    << "<text x='" << ml - 6 << "' y='" << mt + 4
    << "' text-anchor='end' font-size='12'>" << Table::format_number(y1)
    << "</text>\n"
    << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 12
    << "' text-anchor='middle' font-size='13'>" << t.header[0] << "</text>\n";
  for (int c = 1; c < ncols; ++c) {
    const char* color = kColors[(c - 1) % 6];
    s << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (std::size_t r = 0; r < cols[c].size(); ++r)
      s << px(cols[0][r]) << "," << py(cols[c][r]) << " ";
    s << "'/>\n";
    s << "<text x='" << w - mr + 12 << "' y='" << mt + 18 * c << "' fill='" << color
      << "' font-size='13'>" << t.header[c] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline void write_svg(const Table& t, const std::string& path,
                      const std::string& title = {}) {
  const std::string body = to_svg(t, title);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_svg: cannot open " + path);
  out << body;
  if (!out) throw IoError("write_svg: failed writing " + path);
}

}  // namespace omniwpt
