#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spdekit/drift.h"
#include "spdekit/spectral.h"

namespace spdekit::cli {

struct GridConfig {
  double T = 1.0;
  int steps = 64;
  std::vector<int> ladder = {64, 128, 256, 512};
};

// The backward equation lives on R^d with d = modes (state size), so it is
// truncated separately from the simulation.
struct KolmogorovConfig {
  int modes = 1;
  int time_steps = 64;
  int points = 24;
  int gh_order = 24;
  double scale = 0.0;
  double tolerance = 1e-8;
  int max_iterations = 200;
};

struct ExperimentConfig {
  std::string preset;     // informational
  std::string statement;  // admissibility statement the run is declared under
  uint64_t seed = 0;
  int threads = 1;
  std::string out = ".";

  OperatorSpec op;
  int n = 16;  // Galerkin truncation
  DriftSpec drift;
  double noise_eta = 0.5;
  int noise_truncation = 2048;
  GridConfig grid;
  int samples = 64;
  std::vector<double> x0;  // physical state, zero-padded

  KolmogorovConfig kolmogorov;
  std::optional<double> zeta;  // resolvent line; empty picks automatically
  int forcing_samples = 64;    // time samples of the maxreg forcing
  double control_t = 1.0;
  int control_degree = 0;  // 0 picks the smallest admissible profile
  int galerkin_reference = 64;
  std::vector<int> galerkin_ladder = {4, 8, 16};

  void Validate() const;
};

// Throws ConfigInvalid naming the offending key path.
ExperimentConfig FromJson(const nlohmann::json& j);
nlohmann::json ToJson(const ExperimentConfig& c);

// Reads a JSON file. Throws ConfigInvalid.
ExperimentConfig LoadConfig(const std::string& path);

// heat-m1, heat-m2, heat-m3, damped-wave-1d, beam-m1, beam-m2, beam-m3,
// counterexample.
ExperimentConfig Preset(const std::string& name);
std::vector<std::string> PresetNames();

// FNV-1a of the canonical JSON text, 16 hex digits.
std::string ConfigHash(const ExperimentConfig& c);

}  // namespace spdekit::cli
