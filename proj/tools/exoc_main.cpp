#include "exoc/checks.hpp"
#include "exoc/report.hpp"
#include "exoc/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <glob.h>
#include <iostream>

namespace fs = std::filesystem;
using namespace exoc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOpts {
  std::string out_dir = ".";
  int n_steps_override = 0;
  int particles_override = 0;
  int seed_override = -1;
  std::string inject;
};

ScenarioConfig load_config(const std::string& path, const CommonOpts& opts) {
  ScenarioConfig cfg = parse_config_file(path);
  if (opts.n_steps_override > 0) cfg.n_steps = opts.n_steps_override;
  if (opts.particles_override > 0) cfg.particles = opts.particles_override;
  if (opts.seed_override >= 0) cfg.seed = static_cast<unsigned>(opts.seed_override);
  cfg.inject = opts.inject;
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory: " + dir);
}

RunReport base_report(const Scenario& s, const ScenarioConfig& cfg, const std::string& command) {
  RunReport r;
  r.scenario = s.name;
  r.command = command;
  r.seed = cfg.seed;
  r.t0 = cfg.t0;
  r.T = cfg.T;
  r.n_steps = cfg.n_steps;
  r.particles = s.is_meanfield ? cfg.particles : 0;
  return r;
}

void write_timing(const std::string& out_dir, double seconds) {
  // non-deterministic by nature, kept out of report.json
  std::ofstream f(out_dir + "/timing.txt");
  f << seconds << " s\n";
}

int cmd_solve(const std::string& config_path, const CommonOpts& opts, bool with_baseline) {
  const ScenarioConfig cfg = load_config(config_path, opts);
  const Scenario scenario = build_scenario(cfg);
  ensure_out_dir(opts.out_dir);
  const auto t_start = std::chrono::steady_clock::now();

  DescentConfig solver_cfg;
  const Control u_init = default_initial_control(scenario);

  RunReport report = base_report(scenario, cfg, "solve");
  if (!scenario.is_meanfield) {
    const DescentResult result = solve(scenario.problem, u_init, solver_cfg);
    const Trajectory traj = integrate_flow(scenario.problem, result.control, scenario.problem.x0,
                                           0, scenario.problem.horizon.n_steps());
    report.initial_cost = result.trace.initial_cost;
    report.final_cost = result.final_cost;
    report.iterations = static_cast<int>(result.trace.iterations.size()) - 1;
    report.integration_steps = result.trace.total_steps;
    report.final_pmp_residual = pmp_residual(scenario.problem, result.control).residual;
    report.trace = result.trace.iterations;

    write_text_file(opts.out_dir + "/trace.csv", trace_to_csv(result.trace));
    write_text_file(opts.out_dir + "/control.csv", control_to_csv(result.control));
    write_text_file(opts.out_dir + "/trajectory.csv", trajectory_to_csv(traj));

    if (with_baseline) {
      const DescentResult baseline = baseline_gradient_solve(scenario.problem, u_init, solver_cfg);
      write_text_file(opts.out_dir + "/trace_baseline.csv", trace_to_csv(baseline.trace));
      report.extras.emplace_back("baseline_final_cost", baseline.final_cost);
      report.extras.emplace_back("baseline_integration_steps",
                                 static_cast<double>(baseline.trace.total_steps));
    }
  } else {
    const DescentResult result = mf_descent(scenario.mf, u_init, solver_cfg);
    const EnsemblePath path = particle_flow(scenario.mf, result.control, scenario.mf.ensemble0, 0,
                                            scenario.mf.horizon.n_steps());
    report.initial_cost = result.trace.initial_cost;
    report.final_cost = result.final_cost;
    report.iterations = static_cast<int>(result.trace.iterations.size()) - 1;
    report.integration_steps = result.trace.total_steps;
    report.final_pmp_residual = mf_pmp_residual(scenario.mf, result.control).residual;
    report.trace = result.trace.iterations;

    write_text_file(opts.out_dir + "/trace.csv", trace_to_csv(result.trace));
    write_text_file(opts.out_dir + "/control.csv", control_to_csv(result.control));
    write_text_file(opts.out_dir + "/ensemble_initial.csv",
                    ensemble_to_csv(scenario.mf.ensemble0, scenario.mf.horizon.t0()));
    write_text_file(opts.out_dir + "/ensemble_final.csv",
                    ensemble_to_csv(path.terminal(), scenario.mf.horizon.T()));
    if (scenario.mf.state_dim == 1) {
      report.extras.emplace_back("w2_initial_final",
                                 wasserstein2_1d(scenario.mf.ensemble0, path.terminal()));
    }
  }

  write_text_file(opts.out_dir + "/report.json", run_report_to_json(report));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  write_timing(opts.out_dir, seconds);
  std::cerr << "solve " << scenario.name << ": final cost " << format_number(report.final_cost)
            << " (" << seconds << " s)\n";
  return kExitOk;
}

int cmd_check(const std::string& config_path, const CommonOpts& opts, bool as_json) {
  const ScenarioConfig cfg = load_config(config_path, opts);
  const Scenario scenario = build_scenario(cfg);
  const std::vector<CheckResult> results = run_checks(scenario);
  if (as_json) {
    std::cout << checks_to_json(results);
  } else {
    std::cout << checks_to_table(results);
  }
  const bool all_passed =
      std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
  return all_passed ? kExitOk : kExitCheckFailed;
}

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<std::string> paths;
  for (const std::string& pattern : patterns) {
    ::glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
    }
    ::globfree(&g);
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

int cmd_bench(const std::vector<std::string>& patterns, const CommonOpts& opts) {
  const std::vector<std::string> paths = expand_globs(patterns);
  if (paths.empty()) {
    std::cerr << "bench: no config files match the given patterns\n";
    return kExitConfig;
  }
  ensure_out_dir(opts.out_dir);
  DescentConfig solver_cfg;

  std::string table = "scenario,method,final_cost,iterations,integrations_used\n";
  for (const std::string& path : paths) {
    const ScenarioConfig cfg = load_config(path, opts);
    const Scenario scenario = build_scenario(cfg);
    if (scenario.is_meanfield) {
      std::cerr << "bench: skipping mean-field scenario " << scenario.name
                << " (no baseline defined)\n";
      continue;
    }
    const Control u_init = default_initial_control(scenario);
    const DescentResult fb = solve(scenario.problem, u_init, solver_cfg);
    const DescentResult bl = baseline_gradient_solve(scenario.problem, u_init, solver_cfg);
    table += scenario.name + ",feedback," + format_number(fb.final_cost) + ',' +
             std::to_string(fb.trace.iterations.size() - 1) + ',' +
             std::to_string(fb.trace.total_steps) + '\n';
    table += scenario.name + ",baseline," + format_number(bl.final_cost) + ',' +
             std::to_string(bl.trace.iterations.size() - 1) + ',' +
             std::to_string(bl.trace.total_steps) + '\n';
  }
  std::cout << table;
  write_text_file(opts.out_dir + "/bench.csv", table);
  return kExitOk;
}

int cmd_report(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) {
    std::cerr << "report: cannot read " << report_path << "\n";
    return kExitConfig;
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    std::cerr << "report: malformed JSON: " << e.what() << "\n";
    return kExitConfig;
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exoc: exact-increment optimal control toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string config_path;
  std::string report_path;
  std::vector<std::string> bench_patterns;
  bool with_baseline = false;
  bool as_json = false;

  const auto add_common = [&](CLI::App* cmd, bool with_config = true) {
    if (with_config) cmd->add_option("config", config_path, "scenario config file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--n-steps", opts.n_steps_override, "override grid steps");
    cmd->add_option("--particles", opts.particles_override, "override particle count");
    cmd->add_option("--seed", opts.seed_override, "override run seed");
    cmd->add_option("--inject", opts.inject, "fault injection name (test only)");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "run feedback descent on a scenario");
  add_common(solve_cmd);
  solve_cmd->add_flag("--baseline", with_baseline, "also run the conditional-gradient baseline");

  CLI::App* mf_solve_cmd = app.add_subcommand("mf-solve", "run mean-field feedback descent");
  add_common(mf_solve_cmd);

  CLI::App* check_cmd = app.add_subcommand("check", "run the invariant battery");
  add_common(check_cmd);
  check_cmd->add_flag("--json", as_json, "machine-readable results");

  CLI::App* bench_cmd = app.add_subcommand("bench", "compare feedback descent and the baseline");
  bench_cmd->add_option("configs", bench_patterns, "config files or glob patterns")->required();
  bench_cmd->add_option("--out", opts.out_dir, "output directory");
  bench_cmd->add_option("--n-steps", opts.n_steps_override, "override grid steps");
  bench_cmd->add_option("--seed", opts.seed_override, "override run seed");

  CLI::App* report_cmd = app.add_subcommand("report", "pretty-print a report.json");
  report_cmd->add_option("report", report_path, "report.json path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return cmd_solve(config_path, opts, with_baseline);
    if (mf_solve_cmd->parsed()) {
      const ScenarioConfig cfg = load_config(config_path, opts);
      if (!scenario_is_meanfield(cfg.problem_name)) {
        std::cerr << "mf-solve: scenario '" << cfg.problem_name << "' is not mean-field\n";
        return kExitConfig;
      }
      return cmd_solve(config_path, opts, false);
    }
    if (check_cmd->parsed()) return cmd_check(config_path, opts, as_json);
    if (bench_cmd->parsed()) return cmd_bench(bench_patterns, opts);
    if (report_cmd->parsed()) return cmd_report(report_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonFiniteState& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
