#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ffalm/engine.hpp"
#include "ffalm/partition.hpp"
#include "ffalm/theory.hpp"

namespace ffalm {

// Full run description: federation hyperparameters plus data source,
// partition/eval settings, seeds, and the rate-experiment section.
struct RunConfig {
  FederationConfig fed;

  std::optional<std::string> data_csv;  // unset: synthesize
  SynthConfig synth;
  double alpha = 0.3;
  double eval_fraction = 0.2;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string output_dir = "out";

  RateConfig rate;
  double rate_slope_min = -1.0;
  double rate_slope_max = -0.55;
};

// Parses `key = value` lines ('#' comments). Unknown keys, malformed
// values, and invariant violations are hard errors naming the key and
// line. Omitted keys keep algorithm-appropriate defaults; FPFL flips
// penalty_beta/eta_lambda0/dual_growth to its own values unless the
// file pins them explicitly.
RunConfig load_config(const std::string& path);

// Same parser over an in-memory string (used by tests and defaults).
RunConfig parse_config(const std::string& text, const std::string& origin = "<memory>");

// The documented key set, one "key  description" line each.
std::string config_key_help();

}  // namespace ffalm
