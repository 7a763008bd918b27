#include "exoc/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace exoc {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

Vec parse_vector(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  if (vals.empty()) {
    throw ConfigError("expected a numeric vector for " + where + ", got '" + text + "'");
  }
  Vec out(static_cast<Eigen::Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  try {
    size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (trim(text.substr(pos)).empty()) return v;
  } catch (...) {
  }
  throw ConfigError("expected a number for " + where + ", got '" + text + "'");
}

int parse_int(const std::string& text, const std::string& where) {
  try {
    size_t pos = 0;
    const int v = std::stoi(text, &pos);
    if (trim(text.substr(pos)).empty()) return v;
  } catch (...) {
  }
  throw ConfigError("expected an integer for " + where + ", got '" + text + "'");
}

// name(arg1, arg2, ...) with vector-valued args
struct Call {
  std::string name;
  std::vector<Vec> args;
};

Call parse_call(const std::string& text, const std::string& where) {
  const size_t open = text.find('(');
  const size_t close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw ConfigError("expected name(args...) for " + where + ", got '" + text + "'");
  }
  Call call;
  call.name = trim(text.substr(0, open));
  std::string args = text.substr(open + 1, close - open - 1);
  std::istringstream in(args);
  std::string piece;
  while (std::getline(in, piece, ',')) {
    call.args.push_back(parse_vector(trim(piece), where));
  }
  return call;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
  ScenarioConfig cfg;
  std::map<std::string, std::map<std::string, std::string>> sections;

  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos || section.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  const auto get = [&](const std::string& sec, const std::string& key) -> std::optional<std::string> {
    const auto s = sections.find(sec);
    if (s == sections.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  };
  const auto require = [&](const std::string& sec, const std::string& key) -> std::string {
    const auto v = get(sec, key);
    if (!v) throw ConfigError(origin + ": missing required key [" + sec + "] " + key);
    return *v;
  };

  cfg.problem_name = require("problem", "name");
  if (const auto s = get("problem", "seed")) cfg.seed = static_cast<unsigned>(parse_int(*s, "seed"));

  cfg.t0 = parse_double(require("grid", "t0"), "t0");
  cfg.T = parse_double(require("grid", "T"), "T");
  cfg.n_steps = parse_int(require("grid", "n_steps"), "n_steps");
  if (cfg.n_steps < 1 || !(cfg.T > cfg.t0)) {
    throw ConfigError(origin + ": invalid [grid] (need T > t0 and n_steps >= 1)");
  }

  const std::string kind = require("control_set", "kind");
  if (kind == "box") {
    cfg.set_kind = ScenarioConfig::SetKind::Box;
    cfg.lower = parse_vector(require("control_set", "lower"), "lower");
    cfg.upper = parse_vector(require("control_set", "upper"), "upper");
  } else if (kind == "atoms") {
    cfg.set_kind = ScenarioConfig::SetKind::Atoms;
    std::istringstream rows(require("control_set", "atoms"));
    std::string row;
    while (std::getline(rows, row, ';')) {
      row = trim(row);
      if (!row.empty()) cfg.atoms.push_back(parse_vector(row, "atoms"));
    }
    if (cfg.atoms.empty()) throw ConfigError(origin + ": empty atom list");
  } else {
    throw ConfigError(origin + ": control_set kind must be 'box' or 'atoms'");
  }

  if (const auto x0 = get("initial", "x0")) cfg.x0 = parse_vector(*x0, "x0");

  if (sections.count("meanfield") != 0) {
    cfg.has_meanfield = true;
    cfg.particles = parse_int(require("meanfield", "N"), "N");
    if (cfg.particles < 1) throw ConfigError(origin + ": [meanfield] N must be >= 1");
    const Call init = parse_call(require("meanfield", "init"), "init");
    if (init.name == "gaussian") {
      if (init.args.size() != 2 && init.args.size() != 3) {
        throw ConfigError(origin + ": init = gaussian(mean, std[, seed])");
      }
      cfg.init_kind = ScenarioConfig::InitKind::Gaussian;
      cfg.init_mean = init.args[0];
      cfg.init_std = init.args[1];
      if (init.args.size() == 3) {
        if (init.args[2].size() != 1 || init.args[2][0] < 0) {
          throw ConfigError(origin + ": gaussian seed must be a nonnegative scalar");
        }
        cfg.init_seed = static_cast<unsigned>(init.args[2][0]);
      }
    } else if (init.name == "grid") {
      if (init.args.size() != 2 || init.args[0].size() != 1 || init.args[1].size() != 1) {
        throw ConfigError(origin + ": init = grid(lo, hi) takes two scalars (1-D only)");
      }
      cfg.init_kind = ScenarioConfig::InitKind::Grid;
      cfg.init_lo = init.args[0][0];
      cfg.init_hi = init.args[1][0];
    } else {
      throw ConfigError(origin + ": unknown meanfield init '" + init.name + "'");
    }
  }

  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace exoc
