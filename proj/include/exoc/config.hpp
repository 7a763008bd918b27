#pragma once

#include "exoc/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace exoc {

/// Parsed scenario configuration. Text format: INI-style sections with
/// key = value lines, '#' comments, vectors as whitespace-separated numbers,
/// atom lists as ';'-separated vectors.
struct ScenarioConfig {
  std::string problem_name;
  unsigned seed = 0;

  double t0 = 0.0;
  double T = 1.0;
  int n_steps = 100;

  enum class SetKind { Box, Atoms };
  SetKind set_kind = SetKind::Box;
  Vec lower, upper;
  std::vector<Vec> atoms;

  Vec x0;  // classical scenarios

  // mean-field block
  bool has_meanfield = false;
  int particles = 0;
  enum class InitKind { Gaussian, Grid };
  InitKind init_kind = InitKind::Gaussian;
  Vec init_mean, init_std;               // gaussian(mean, std[, seed])
  std::optional<unsigned> init_seed;     // optional third gaussian argument
  double init_lo = 0.0, init_hi = 1.0;   // grid(lo, hi), 1-D only

  // test-only fault injection, set by the CLI flag --inject
  std::string inject;
};

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "<memory>");
ScenarioConfig parse_config_file(const std::string& path);

}  // namespace exoc
