// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oric/error_analysis.hpp"
#include "oric/estimator.hpp"
#include "oric/evaluator.hpp"
#include "oric/reward.hpp"
#include "oric/synth.hpp"

namespace oric {

// Hyper-parameter lists for grid search. An empty list keeps the base value.
struct TrainGrid {
  std::vector<std::vector<std::size_t>> hidden;
  std::vector<double> learning_rate;
  std::vector<double> momentum;
  std::vector<std::size_t> epochs;
  std::vector<std::size_t> batch_size;
  std::vector<bool> weighted;
};

// Cartesian product of the grid over `base`, in lexicographic order of the
// lists (hidden outermost).
std::vector<TrainConfig> expand_grid(const TrainConfig& base, const TrainGrid& grid);

inline const std::vector<std::string>& known_policies() {
  static const std::vector<std::string> names{"oracle-oric",   "oracle-ori",        "estimator",
                                              "estimator-mori", "estimator-ori",    "estimator-vanilla",
                                              "random",         "dcsb"};
  return names;
}

struct ExperimentConfig {
  // Dataset: either the three COCO-style files or a synthetic spec.
  std::string gt_path;
  std::string weak_path;
  std::string strong_path;
  std::optional<SynthSpec> synth;

  ContextSpec context;
  TrainConfig train;
  TrainGrid grid;
  std::vector<std::string> policies{"oracle-oric", "oracle-ori", "estimator", "random"};
  std::vector<double> ratios{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t folds = 5;
  std::string output_dir;
  EvalConfig eval;
  ErrorThresholds error_thresholds;
  // Offloading ratio of the oracle plans in the error report.
  double error_ratio = 0.2;
  unsigned threads = 0;
};

// With require_dataset false the data section may be absent, for callers
// that supply the dataset themselves.
void validate(const ExperimentConfig& config, bool require_dataset = true);
std::string experiment_config_to_json(const ExperimentConfig& config);
// Schema-checked: unknown keys and wrong types are ValidationErrors.
ExperimentConfig experiment_config_from_json(const std::string& text, bool require_dataset = true);
// Relative dataset paths resolve against the file's directory.
ExperimentConfig load_experiment_config(const std::string& path, bool require_dataset = true);

}  // namespace oric
