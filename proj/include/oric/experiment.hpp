// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oric/config.hpp"
#include "oric/dataset.hpp"
#include "oric/error_analysis.hpp"
#include "oric/policy.hpp"
#include "oric/reward_io.hpp"

namespace oric {

// Loads the dataset files named in the config or generates the synth spec.
Dataset load_experiment_dataset(const ExperimentConfig& config);

struct FoldPolicyResult {
  std::size_t fold = 0;
  PolicyResult result;
};

struct SweepOutput {
  double weak_map = 0.0;
  double strong_map = 0.0;
  // Ratio-driven policies: one row per (policy, ratio, seed). dcsb adds one
  // row at its induced ratio.
  std::vector<PolicyResult> results;
  // The same policies restricted to each fold's held-out images, normalized
  // against that fold's own weak and strong mAPs.
  std::vector<FoldPolicyResult> fold_results;
  // Oracle rewards over the whole dataset, with out-of-fold estimates of the
  // first estimator policy when one ran.
  std::vector<RewardRecord> rewards;
};

SweepOutput run_sweep(const Dataset& dataset, const ExperimentConfig& config);

std::string fold_results_to_csv(std::span<const FoldPolicyResult> results);
// Ratio to seed-mean normalized mAP per policy, for plotting.
std::string plot_data_json(const SweepOutput& output);
// Writes sweep.csv, folds.csv, plot_data.json and rewards.ndjson into `dir`.
void write_sweep_outputs(const SweepOutput& output, const std::string& dir);

struct ErrorRow {
  std::string detector_config;
  ErrorCategory category = ErrorCategory::kClassification;
  double map_reduction = 0.0;
};

std::vector<ErrorRow> error_rows(const std::string& name, const Dataset& dataset, const std::vector<bool>& offload,
                                 const ErrorThresholds& thresholds = {}, const EvalConfig& eval = {});
// Breakdown for the weak detector, the strong detector and the ORIC and ORI
// oracle plans at config.error_ratio.
std::vector<ErrorRow> error_report(const Dataset& dataset, const ExperimentConfig& config);
std::string error_rows_to_csv(std::span<const ErrorRow> rows);

struct GridEntry {
  TrainConfig config;
  double spearman = 0.0;             // out-of-fold estimate vs whole-dataset target
  double mean_normalized_map = 0.0;  // estimator policy over the interior ratios
};

struct GridSearchResult {
  std::vector<GridEntry> entries;
  std::size_t best = 0;  // highest mean normalized mAP, first on ties
};

GridSearchResult run_grid_search(const Dataset& dataset, const ExperimentConfig& config);
std::string grid_to_csv(const GridSearchResult& result);

}  // namespace oric
