// lanemerge command-line front end: validate, run, compare and sweep merge
// scenarios, and render the standard figure set from saved traces.

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lanemerge/plots.hpp"
#include "lanemerge/scenario.hpp"
#include "lanemerge/simulation.hpp"
#include "lanemerge/trace_io.hpp"

namespace fs = std::filesystem;
using namespace lanemerge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonOpts {
  std::string out_dir = "out";
  std::optional<double> dt;
  std::optional<long long> seed;
  bool no_plots = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--dt", opts.dt, "override the simulation step [s]");
  cmd->add_option("--seed", opts.seed, "override the channel RNG seed");
  cmd->add_flag("--no-plots", opts.no_plots, "skip SVG figure generation");
  cmd->add_option("--set", opts.overrides,
                  "override a config value, dotted key=value (repeatable)");
}

// Load + override + validate. Returns nullopt after printing diagnostics.
std::optional<sim::ScenarioConfig> load_config(const std::string& path,
                                               const CommonOpts& opts) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return std::nullopt;
  }
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    std::cerr << "error: " << path << " is not valid JSON\n";
    return std::nullopt;
  }
  if (opts.dt) sim::apply_override(j, "dt", std::to_string(*opts.dt));
  if (opts.seed) sim::apply_override(j, "channel.seed", std::to_string(*opts.seed));
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
      return std::nullopt;
    }
    sim::apply_override(j, kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto parsed = sim::parse_scenario(j);
  if (!parsed.ok()) {
    std::cerr << "invalid scenario " << path << ":\n";
    for (const auto& e : parsed.errors) std::cerr << "  " << e << "\n";
    return std::nullopt;
  }
  return parsed.config;
}

void write_run_outputs(const sim::RunResult& result, const std::string& dir,
                       bool plots) {
  fs::create_directories(dir);
  fs::create_directories(dir + "/paths");
  const std::string csv = io::trace_to_csv(result.trace);
  io::write_file(dir + "/trace.csv", csv);
  io::write_file(dir + "/messages.jsonl", io::messages_to_jsonl(result.trace));
  io::write_file(dir + "/metrics.json",
                 io::metrics_to_json(result.metrics).dump(2) + "\n");
  char name[64];
  for (std::size_t i = 0; i < result.trace.paths.size(); ++i) {
    std::snprintf(name, sizeof(name), "/paths/path_%03zu.csv", i);
    io::write_file(dir + name, io::path_to_csv(result.trace.paths[i]));
  }
  if (plots) {
    const auto parsed = io::read_trace_csv(csv);
    plots::write_run_figures(parsed, dir, result.trace.config.name);
  }
}

std::string fmt_opt(const std::optional<double>& v, const char* fmt) {
  if (!v) return "n/a";
  char buf[48];
  std::snprintf(buf, sizeof(buf), fmt, *v);
  return buf;
}

void print_comparison_table(const std::vector<sim::ComparisonRow>& rows) {
  std::printf("%-28s %9s %11s %12s %10s %9s %12s %11s\n", "scenario",
              "completed", "merge_time", "path_length", "max|beta|",
              "rss_viol", "d_merge[%]", "d_path[%]");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::printf("%-28s %9s %11s %12s %10.4f %9d %12s %11s\n", r.name.c_str(),
                r.metrics.completed ? "yes" : "no",
                fmt_opt(r.metrics.merge_time, "%.2f").c_str(),
                fmt_opt(r.metrics.path_length, "%.1f").c_str(),
                r.metrics.max_abs_sideslip, r.metrics.rss_violations,
                i == 0 ? "-" : fmt_opt(r.merge_time_delta_pct, "%+.1f").c_str(),
                i == 0 ? "-" : fmt_opt(r.path_length_delta_pct, "%+.1f").c_str());
  }
}

int cmd_run(const std::string& config_path, const CommonOpts& opts) {
  const auto cfg = load_config(config_path, opts);
  if (!cfg) return kExitValidation;
  try {
    const auto result = sim::run_scenario(*cfg);
    write_run_outputs(result, opts.out_dir, !opts.no_plots);
    std::cout << "wrote " << opts.out_dir << " ("
              << (result.metrics.completed ? "merge completed" : "no merge")
              << ", rss_violations=" << result.metrics.rss_violations << ")\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_compare(const std::vector<std::string>& config_paths,
                const CommonOpts& opts) {
  std::vector<sim::ScenarioConfig> configs;
  for (const auto& p : config_paths) {
    const auto cfg = load_config(p, opts);
    if (!cfg) return kExitValidation;
    configs.push_back(*cfg);
  }
  try {
    std::vector<sim::ComparisonRow> rows;
    std::vector<std::pair<std::string, io::CsvTrace>> traces;
    for (const auto& cfg : configs) {
      sim::ComparisonRow row;
      row.name = cfg.name;
      const auto result = sim::run_scenario(cfg);
      row.metrics = result.metrics;
      rows.push_back(row);
      traces.emplace_back(cfg.name,
                          io::read_trace_csv(io::trace_to_csv(result.trace)));
    }
    const auto& base = rows.front().metrics;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      auto& r = rows[i];
      if (base.merge_time && r.metrics.merge_time && *base.merge_time > 0.0)
        r.merge_time_delta_pct =
            100.0 * (*r.metrics.merge_time - *base.merge_time) / *base.merge_time;
      if (base.path_length && r.metrics.path_length && *base.path_length > 0.0)
        r.path_length_delta_pct =
            100.0 * (*r.metrics.path_length - *base.path_length) / *base.path_length;
    }
    fs::create_directories(opts.out_dir);
    io::write_file(opts.out_dir + "/comparison.json",
                   io::comparison_to_json(rows).dump(2) + "\n");
    if (!opts.no_plots)
      io::write_file(opts.out_dir + "/comparison_paths.svg",
                     plots::render_comparison_paths_svg(traces));
    print_comparison_table(rows);
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

struct SweepAxis {
  std::string key;
  std::vector<double> values;
};

std::optional<SweepAxis> parse_sweep_spec(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return std::nullopt;
  SweepAxis axis;
  axis.key = spec.substr(0, eq);
  const std::string range = spec.substr(eq + 1);
  double start, stop, step;
  if (std::sscanf(range.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3)
    return std::nullopt;
  if (!(step > 0.0) || start > stop) return std::nullopt;
  for (double v = start; v <= stop + 1e-9; v += step) axis.values.push_back(v);
  return axis;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::string>& specs, const CommonOpts& opts) {
  std::vector<SweepAxis> axes;
  for (const auto& s : specs) {
    auto axis = parse_sweep_spec(s);
    if (!axis) {
      std::cerr << "error: bad sweep spec '" << s
                << "' (expected key=start:stop:step with step > 0)\n";
      return kExitValidation;
    }
    axes.push_back(*axis);
  }
  std::string text;
  try {
    text = io::read_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  nlohmann::json base = nlohmann::json::parse(text, nullptr, false);
  if (base.is_discarded()) {
    std::cerr << "error: " << config_path << " is not valid JSON\n";
    return kExitValidation;
  }

  // cartesian grid, validated up front so nothing is written on a bad point
  std::vector<std::vector<double>> points;
  std::vector<double> current(axes.size());
  std::function<void(std::size_t)> expand = [&](std::size_t i) {
    if (i == axes.size()) {
      points.push_back(current);
      return;
    }
    for (double v : axes[i].values) {
      current[i] = v;
      expand(i + 1);
    }
  };
  expand(0);

  std::vector<sim::ScenarioConfig> configs;
  for (const auto& pt : points) {
    nlohmann::json j = base;
    if (opts.dt) sim::apply_override(j, "dt", std::to_string(*opts.dt));
    if (opts.seed) sim::apply_override(j, "channel.seed", std::to_string(*opts.seed));
    for (const auto& kv : opts.overrides) {
      const auto eq = kv.find('=');
      if (eq != std::string::npos)
        sim::apply_override(j, kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (std::size_t a = 0; a < axes.size(); ++a)
      sim::apply_override(j, axes[a].key, std::to_string(pt[a]));
    auto parsed = sim::parse_scenario(j);
    if (!parsed.ok()) {
      std::cerr << "invalid scenario at sweep point:\n";
      for (const auto& e : parsed.errors) std::cerr << "  " << e << "\n";
      return kExitValidation;
    }
    configs.push_back(*parsed.config);
  }

  try {
    // independent runs; rows stay in grid order
    std::vector<std::future<sim::Metrics>> runs;
    runs.reserve(configs.size());
    for (const auto& cfg : configs)
      runs.push_back(std::async(std::launch::async, [cfg] {
        return sim::run_scenario(cfg).metrics;
      }));

    std::string csv;
    for (const auto& a : axes) csv += a.key + ",";
    csv += "completed,merge_time,path_length,max_abs_sideslip,"
           "sideslip_sign_changes,min_gap_ratio,rss_violations\n";
    char buf[64];
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto metrics = runs[i].get();
      for (std::size_t a = 0; a < axes.size(); ++a) {
        std::snprintf(buf, sizeof(buf), "%.6g,", points[i][a]);
        csv += buf;
      }
      csv += metrics.completed ? "1," : "0,";
      csv += fmt_opt(metrics.merge_time, "%.4f") + ",";
      csv += fmt_opt(metrics.path_length, "%.3f") + ",";
      std::snprintf(buf, sizeof(buf), "%.6f,%d,", metrics.max_abs_sideslip,
                    metrics.sideslip_sign_changes);
      csv += buf;
      csv += fmt_opt(metrics.min_gap_ratio, "%.4f") + ",";
      std::snprintf(buf, sizeof(buf), "%d\n", metrics.rss_violations);
      csv += buf;
    }
    fs::create_directories(opts.out_dir);
    io::write_file(opts.out_dir + "/sweep.csv", csv);
    std::cout << "wrote " << opts.out_dir << "/sweep.csv (" << configs.size()
              << " points)\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_validate(const std::string& config_path, const CommonOpts& opts) {
  const auto cfg = load_config(config_path, opts);
  if (!cfg) return kExitValidation;
  std::cout << config_path << ": ok (" << cfg->vehicles.size() << " vehicles, "
            << cfg->steps() << " steps)\n";
  return kExitOk;
}

int cmd_plot(const std::string& run_dir, const CommonOpts& opts) {
  try {
    const auto trace = io::read_trace_csv(io::read_file(run_dir + "/trace.csv"));
    const std::string out =
        opts.out_dir == "out" ? run_dir : opts.out_dir; // default: in place
    fs::create_directories(out);
    plots::write_run_figures(trace, out, fs::path(run_dir).filename().string());
    std::cout << "wrote figures to " << out << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"rule-based lane-merge planning and simulation"};
  app.require_subcommand(1);

  CommonOpts run_opts, cmp_opts, sweep_opts, val_opts, plot_opts;
  std::string run_config, sweep_config, val_config, plot_dir;
  std::vector<std::string> cmp_configs, sweep_specs;

  auto* run = app.add_subcommand("run", "simulate one scenario");
  run->add_option("config", run_config, "scenario JSON file")->required();
  add_common(run, run_opts);

  auto* cmp = app.add_subcommand("compare", "run several scenarios and diff metrics");
  cmp->add_option("configs", cmp_configs, "scenario JSON files")
      ->required()
      ->expected(2, -1);
  add_common(cmp, cmp_opts);

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
  sweep->add_option("config", sweep_config, "scenario JSON file")->required();
  sweep->add_option("specs", sweep_specs, "key=start:stop:step (repeatable)")
      ->required()
      ->expected(1, -1);
  add_common(sweep, sweep_opts);

  auto* val = app.add_subcommand("validate", "check a scenario file");
  val->add_option("config", val_config, "scenario JSON file")->required();
  add_common(val, val_opts);

  auto* plot = app.add_subcommand("plot", "re-render figures from a run directory");
  plot->add_option("run_dir", plot_dir, "directory containing trace.csv")
      ->required();
  add_common(plot, plot_opts);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(run_config, run_opts);
  if (cmp->parsed()) return cmd_compare(cmp_configs, cmp_opts);
  if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_specs, sweep_opts);
  if (val->parsed()) return cmd_validate(val_config, val_opts);
  if (plot->parsed()) return cmd_plot(plot_dir, plot_opts);
  return kExitOk;
}
