#pragma once

#include "exoc/descent.hpp"
#include "exoc/meanfield.hpp"
#include "exoc/variation.hpp"

#include <string>
#include <vector>

namespace exoc {

/// All numeric output is printed with 17 significant digits so values
/// round-trip exactly and repeated runs are byte-identical.
std::string format_number(double v);

std::string trajectory_to_csv(const Trajectory& traj);
std::string control_to_csv(const Control& u);
std::string trace_to_csv(const DescentTrace& trace);
std::string pmp_report_to_csv(const PmpReport& report, const TimeGrid& grid);
std::string ensemble_to_csv(const ParticleEnsemble& ens, double t);

std::string increment_report_to_json(const IncrementReport& report);
std::string pmp_report_to_json(const PmpReport& report, const TimeGrid& grid);

/// Top-level result of one CLI command. Wall-clock time is deliberately kept
/// out of the serialized report (it would break byte-identical reruns) and
/// goes to a sidecar instead.
struct RunReport {
  std::string scenario;
  std::string command;
  unsigned seed = 0;
  double t0 = 0.0, T = 0.0;
  int n_steps = 0;
  int particles = 0;  // 0 for classical runs
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  std::int64_t integration_steps = 0;
  double final_pmp_residual = 0.0;
  std::vector<DescentIteration> trace;
  std::vector<std::pair<std::string, double>> extras;  // command-specific scalars
};

std::string run_report_to_json(const RunReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace exoc
