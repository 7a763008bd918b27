#include "exoc/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace exoc {

namespace {

std::string csv_vec(const Vec& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    out += ',';
    out += format_number(v[i]);
  }
  return out;
}

// minimal JSON emitter: enough for the flat report schema, deterministic
class JsonWriter {
 public:
  void open_object() { put('{'); }
  void close_object() { put('}'); }
  void open_array(const std::string& key) {
    comma();
    out_ += '"' + key + "\":[";
    fresh_ = true;
  }
  void close_array() {
    out_ += ']';
    fresh_ = false;
  }
  void field(const std::string& key, double v) {
    comma();
    out_ += '"' + key + "\":" + format_number(v);
  }
  void field(const std::string& key, std::int64_t v) {
    comma();
    out_ += '"' + key + "\":" + std::to_string(v);
  }
  void field(const std::string& key, int v) { field(key, static_cast<std::int64_t>(v)); }
  void field(const std::string& key, const std::string& v) {
    comma();
    out_ += '"' + key + "\":\"" + v + '"';
  }
  void begin_element() {
    comma();
    put('{');
  }
  void end_element() {
    out_ += '}';
    fresh_ = false;
  }
  void raw_element(const std::string& fragment) {
    comma();
    out_ += fragment;
  }
  std::string str() const { return out_; }

 private:
  void put(char c) {
    out_ += c;
    fresh_ = true;
  }
  void comma() {
    if (!fresh_) out_ += ',';
    fresh_ = false;
  }

  std::string out_;
  bool fresh_ = true;
};

void trace_fields(JsonWriter& w, const DescentIteration& row) {
  w.begin_element();
  w.field("iter", row.iter);
  w.field("cost", row.cost);
  w.field("predicted_decrease", row.predicted_decrease);
  w.field("realized_decrease", row.realized_decrease);
  w.field("pmp_residual", row.pmp_residual);
  w.field("resimulations", row.resimulations);
  w.field("steps_total", row.steps_total);
  w.end_element();
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "t";
  const int dim = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
  for (int i = 1; i <= dim; ++i) out += ",x_" + std::to_string(i);
  out += '\n';
  for (int k = traj.first_node; k <= traj.last_node(); ++k) {
    out += format_number(traj.grid.node(k));
    out += csv_vec(traj.at_node(k));
    out += '\n';
  }
  return out;
}

std::string control_to_csv(const Control& u) {
  std::string out = "t";
  const int dim = u.values.empty() ? 0 : static_cast<int>(u.values.front().size());
  for (int i = 1; i <= dim; ++i) out += ",u_" + std::to_string(i);
  out += '\n';
  for (int k = 0; k < u.grid.n_steps(); ++k) {
    out += format_number(u.grid.node(k));
    out += csv_vec(u.at_interval(k));
    out += '\n';
  }
  return out;
}

std::string trace_to_csv(const DescentTrace& trace) {
  std::string out = "iter,cost,predicted,realized,residual,integrations_used\n";
  for (const DescentIteration& row : trace.iterations) {
    out += std::to_string(row.iter);
    out += ',';
    out += format_number(row.cost);
    out += ',';
    out += format_number(row.predicted_decrease);
    out += ',';
    out += format_number(row.realized_decrease);
    out += ',';
    out += format_number(row.pmp_residual);
    out += ',';
    out += std::to_string(row.steps_total);
    out += '\n';
  }
  return out;
}

std::string pmp_report_to_csv(const PmpReport& report, const TimeGrid& grid) {
  std::string out = "t,H_ref,H_min";
  const int dim = report.minimizer_per_node.empty()
                      ? 0
                      : static_cast<int>(report.minimizer_per_node.front().size());
  for (int i = 1; i <= dim; ++i) out += ",argmin_" + std::to_string(i);
  out += '\n';
  for (size_t k = 0; k < report.h_ref.size(); ++k) {
    out += format_number(grid.node(static_cast<int>(k)));
    out += ',';
    out += format_number(report.h_ref[k]);
    out += ',';
    out += format_number(report.h_min[k]);
    out += csv_vec(report.minimizer_per_node[k]);
    out += '\n';
  }
  return out;
}

std::string ensemble_to_csv(const ParticleEnsemble& ens, double t) {
  std::string out = "t,particle";
  for (int i = 1; i <= ens.dim(); ++i) out += ",x_" + std::to_string(i);
  out += '\n';
  for (int i = 0; i < ens.size(); ++i) {
    out += format_number(t);
    out += ',' + std::to_string(i);
    out += csv_vec(ens.points[static_cast<size_t>(i)]);
    out += '\n';
  }
  return out;
}

std::string increment_report_to_json(const IncrementReport& report) {
  JsonWriter w;
  w.open_object();
  w.field("predicted", report.predicted);
  w.field("realized", report.realized);
  w.field("abs_gap", report.abs_gap);
  w.field("grid_h", report.grid_h);
  w.close_object();
  return w.str();
}

std::string pmp_report_to_json(const PmpReport& report, const TimeGrid& grid) {
  JsonWriter w;
  w.open_object();
  w.field("residual", report.residual);
  w.field("worst_node", report.worst_node);
  w.field("worst_time", grid.node(report.worst_node));
  w.open_array("minimizer_per_node");
  for (const Vec& u : report.minimizer_per_node) {
    std::string row = "[";
    for (int i = 0; i < u.size(); ++i) {
      if (i > 0) row += ',';
      row += format_number(u[i]);
    }
    row += ']';
    w.raw_element(row);
  }
  w.close_array();
  w.close_object();
  return w.str();
}

std::string run_report_to_json(const RunReport& report) {
  JsonWriter w;
  w.open_object();
  w.field("scenario", report.scenario);
  w.field("command", report.command);
  w.field("seed", static_cast<std::int64_t>(report.seed));
  w.field("t0", report.t0);
  w.field("T", report.T);
  w.field("n_steps", report.n_steps);
  w.field("particles", report.particles);
  w.field("initial_cost", report.initial_cost);
  w.field("final_cost", report.final_cost);
  w.field("iterations", report.iterations);
  w.field("integration_steps", report.integration_steps);
  w.field("final_pmp_residual", report.final_pmp_residual);
  for (const auto& [key, value] : report.extras) {
    w.field(key, value);
  }
  w.open_array("trace");
  for (const DescentIteration& row : report.trace) trace_fields(w, row);
  w.close_array();
  w.close_object();
  return w.str() + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write file: " + path);
  }
  out << content;
}

}  // namespace exoc
