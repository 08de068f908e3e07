#pragma once

#include <map>
#include <string>
#include <vector>

#include "lanemerge/svg_plot.hpp"
#include "lanemerge/trace_io.hpp"

namespace lanemerge::plots {

// Per-vehicle column extraction from a flat CSV trace.
inline std::map<std::string, std::vector<io::CsvTrace::Row>> by_vehicle(
    const io::CsvTrace& trace) {
  std::map<std::string, std::vector<io::CsvTrace::Row>> out;
  for (const auto& r : trace.rows) out[r.veh].push_back(r);
  return out;
}

// X-Y path overlay of all vehicles in a run.
inline std::string render_paths_svg(const io::CsvTrace& trace,
                                    const std::string& title) {
  svg::LinePlot plot(title, "X [m]", "Y [m]", 960, 380);
  auto groups = by_vehicle(trace);
  std::size_t i = 0;
  for (const auto& name : trace.vehicles) {
    const auto& rows = groups[name];
    std::vector<double> xs, ys;
    xs.reserve(rows.size());
    ys.reserve(rows.size());
    for (const auto& r : rows) {
      xs.push_back(r.x);
      ys.push_back(r.y);
    }
    plot.add_series(name, std::move(xs), std::move(ys), svg::palette(i),
                    name != "ego" && i > 0);
    ++i;
  }
  return plot.render();
}

// Signal-vs-time figure for one column of the trace.
inline std::string render_signal_svg(const io::CsvTrace& trace,
                                     const std::string& title,
                                     const std::string& y_label,
                                     double io::CsvTrace::Row::*member) {
  svg::LinePlot plot(title, "t [s]", y_label);
  auto groups = by_vehicle(trace);
  std::size_t i = 0;
  for (const auto& name : trace.vehicles) {
    const auto& rows = groups[name];
    std::vector<double> ts, vs;
    ts.reserve(rows.size());
    vs.reserve(rows.size());
    for (const auto& r : rows) {
      ts.push_back(r.t);
      vs.push_back(r.*member);
    }
    plot.add_series(name, std::move(ts), std::move(vs), svg::palette(i));
    ++i;
  }
  return plot.render();
}

// The standard figure set for one run directory.
inline void write_run_figures(const io::CsvTrace& trace,
                              const std::string& out_dir,
                              const std::string& run_name) {
  io::write_file(out_dir + "/paths.svg",
                 render_paths_svg(trace, run_name + ": lane-merge paths"));
  io::write_file(out_dir + "/sideslip.svg",
                 render_signal_svg(trace, run_name + ": sideslip angle",
                                   "beta [rad]", &io::CsvTrace::Row::beta));
  io::write_file(out_dir + "/yaw.svg",
                 render_signal_svg(trace, run_name + ": yaw angle",
                                   "psi [rad]", &io::CsvTrace::Row::psi));
  io::write_file(out_dir + "/speed.svg",
                 render_signal_svg(trace, run_name + ": longitudinal speed",
                                   "v [m/s]", &io::CsvTrace::Row::v));
}

// Combined path overlay across several runs (ego paths only).
inline std::string render_comparison_paths_svg(
    const std::vector<std::pair<std::string, io::CsvTrace>>& runs) {
  svg::LinePlot plot("lane-merge paths", "X [m]", "Y [m]", 960, 380);
  std::size_t i = 0;
  for (const auto& [name, trace] : runs) {
    auto groups = by_vehicle(trace);
    if (groups.count("ego")) {
      std::vector<double> xs, ys;
      for (const auto& r : groups["ego"]) {
        xs.push_back(r.x);
        ys.push_back(r.y);
      }
      plot.add_series(name + " ego", std::move(xs), std::move(ys),
                      svg::palette(i), i % 2 == 1);
    }
    ++i;
  }
  return plot.render();
}

} // namespace lanemerge::plots
