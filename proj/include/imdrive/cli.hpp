#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage/other failure,
// 2 unknown scenario, 3 malformed config file, 4 unwritable output path.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "imdrive/csv.hpp"
#include "imdrive/scenario.hpp"
#include "imdrive/simulation.hpp"

namespace imdrive {

namespace cli_detail {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnknownScenario = 2;
inline constexpr int kExitBadConfig = 3;
inline constexpr int kExitBadOutput = 4;

struct ResolveResult {
  ScenarioConfig cfg;
  int exit_code{kExitOk};
  std::string error;
};

// A name argument is a config file if it exists on disk, otherwise a
// builtin scenario name.
inline ResolveResult resolve_scenario(const std::string& arg) {
  ResolveResult r;
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(arg, ec)) {
    std::ifstream in(arg);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      r.cfg = parse_config(ss.str());
      r.cfg.validate();
    } catch (const ConfigError& e) {
      r.exit_code = kExitBadConfig;
      r.error = std::string("config file '") + arg + "': " + e.what();
    }
    return r;
  }
  const auto builtins = builtin_scenarios();
  const ScenarioConfig* found = find_builtin(builtins, arg);
  if (!found) {
    r.exit_code = kExitUnknownScenario;
    r.error = "unknown scenario '" + arg + "' (try: imdrive list)";
    return r;
  }
  r.cfg = *found;
  return r;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline void print_summary(std::ostream& os, const RunSummary& s) {
  os << "  final_Rr_hat            " << fmt(s.final_rr_hat) << " ohm\n";
  os << "  Rr_settling_time        "
     << (s.rr_settling_time ? fmt(*s.rr_settling_time) + " s"
                            : std::string("not-settled"))
     << "\n";
  os << "  steady_lambda_qr_ratio  " << fmt(s.steady_lambda_qr_ratio) << "\n";
  os << "  speed_rise_time         "
     << (s.speed_rise_time ? fmt(*s.speed_rise_time) + " s"
                           : std::string("not-reached"))
     << "\n";
  os << "  max_speed_overshoot     " << fmt(s.max_speed_overshoot_pct)
     << " %\n";
}

inline int write_series(const std::string& out_dir, const std::string& file,
                        const std::vector<Sample>& series, std::ostream& err,
                        std::string* path_out) {
  namespace fs = std::filesystem;
  fs::path path = fs::path(out_dir) / file;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  try {
    write_csv(path.string(), series);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadOutput;
  }
  if (path_out) *path_out = path.string();
  return kExitOk;
}

}  // namespace cli_detail

inline int cli_main(const std::vector<std::string>& args,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  using namespace cli_detail;

  CLI::App app{"induction motor drive simulator: indirect field-oriented "
               "control with online rotor resistance adaptation"};
  app.require_subcommand(1);

  std::string scenario_arg, out_dir = ".", csv_arg, param_key, values_arg;
  double true_rr = -1.0, target = -1.0;

  auto* cmd_list = app.add_subcommand("list", "list built-in scenarios");

  auto* cmd_run =
      app.add_subcommand("run", "run a built-in scenario or a config file");
  cmd_run->add_option("scenario", scenario_arg, "scenario name or config path")
      ->required();
  cmd_run->add_option("--out", out_dir, "output directory");

  auto* cmd_summary =
      app.add_subcommand("summary", "recompute summary metrics from a CSV");
  cmd_summary->add_option("csv", csv_arg, "CSV file from a previous run")
      ->required();
  cmd_summary->add_option("--true-rr", true_rr,
                          "settling-band reference (default: final Rr_hat)");
  cmd_summary->add_option("--target-rpm", target,
                          "speed target (default: mean of the last 10%)");

  auto* cmd_sweep = app.add_subcommand(
      "sweep", "run a scenario repeatedly, varying one config key");
  cmd_sweep->add_option("scenario", scenario_arg, "scenario name or config path")
      ->required();
  cmd_sweep->add_option("--param", param_key, "config key to vary")
      ->required();
  cmd_sweep->add_option("--values", values_arg, "comma-separated values")
      ->required();
  cmd_sweep->add_option("--out", out_dir, "output directory");

  std::vector<const char*> argv;
  argv.push_back("imdrive");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (cmd_list->parsed()) {
      out << "name           cmd_Rr  adaptation  description\n";
      for (const auto& s : builtin_scenarios()) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-14s %-7.3f %-11s %s\n",
                      s.name.c_str(), s.cmd_Rr,
                      s.adaptation_enabled ? "on" : "off",
                      s.adaptation_enabled
                          ? "resistance adapted online from one fourth"
                          : (s.cmd_Rr == s.true_Rr
                                 ? "command resistance matches the machine"
                                 : "detuned command resistance, no adaptation"));
        out << line;
      }
      return kExitOk;
    }

    if (cmd_run->parsed()) {
      ResolveResult r = resolve_scenario(scenario_arg);
      if (r.exit_code != kExitOk) {
        err << "error: " << r.error << "\n";
        return r.exit_code;
      }
      const RunResult res = run(r.cfg);
      std::string path;
      const int rc =
          write_series(out_dir, r.cfg.output_file(), res.series, err, &path);
      if (rc != kExitOk) return rc;
      out << "scenario " << r.cfg.name << ": wrote " << path << " ("
          << res.series.size() << " rows)\n";
      print_summary(out, res.summary);
      return kExitOk;
    }

    if (cmd_summary->parsed()) {
      std::vector<Sample> series;
      try {
        series = read_csv(csv_arg);
      } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitBadConfig;
      }
      if (series.empty()) {
        err << "error: CSV has no data rows\n";
        return kExitBadConfig;
      }
      if (true_rr <= 0.0) true_rr = series.back().rr_hat;
      if (target < 0.0) {
        const std::size_t tail = std::max<std::size_t>(1, series.size() / 10);
        double acc = 0.0;
        for (std::size_t i = series.size() - tail; i < series.size(); ++i)
          acc += series[i].omega_r_rpm;
        target = acc / static_cast<double>(tail);
      }
      const RunSummary s = summarize(series, true_rr, target);
      out << "summary of " << csv_arg << " (true_Rr=" << fmt(true_rr)
          << ", target_rpm=" << fmt(target) << ")\n";
      print_summary(out, s);
      return kExitOk;
    }

    if (cmd_sweep->parsed()) {
      ResolveResult r = resolve_scenario(scenario_arg);
      if (r.exit_code != kExitOk) {
        err << "error: " << r.error << "\n";
        return r.exit_code;
      }
      std::vector<std::string> values;
      std::stringstream ss(values_arg);
      std::string item;
      while (std::getline(ss, item, ',')) values.push_back(item);
      if (values.empty()) {
        err << "error: --values is empty\n";
        return kExitError;
      }
      out << "value        final_Rr_hat  settle_s    ratio       rise_s      "
             "overshoot_%\n";
      for (const auto& v : values) {
        ScenarioConfig cfg = r.cfg;
        try {
          set_config_key(cfg, param_key, v);
          cfg.validate();
        } catch (const ConfigError& e) {
          err << "error: " << e.what() << "\n";
          return kExitBadConfig;
        }
        cfg.name = r.cfg.name + "__" + param_key + "=" + v;
        cfg.output.clear();
        const RunResult res = run(cfg);
        const int rc =
            write_series(out_dir, cfg.output_file(), res.series, err, nullptr);
        if (rc != kExitOk) return rc;
        const RunSummary& s = res.summary;
        char line[200];
        std::snprintf(
            line, sizeof(line), "%-12s %-13.6g %-11s %-11.4g %-11s %-10.3g\n",
            v.c_str(), s.final_rr_hat,
            s.rr_settling_time ? fmt(*s.rr_settling_time).c_str() : "-",
            s.steady_lambda_qr_ratio,
            s.speed_rise_time ? fmt(*s.speed_rise_time).c_str() : "-",
            s.max_speed_overshoot_pct);
        out << line;
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const SimulationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace imdrive
