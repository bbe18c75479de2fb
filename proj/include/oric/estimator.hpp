// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oric/dataset.hpp"
#include "oric/features.hpp"
#include "oric/mlp.hpp"
#include "oric/reward.hpp"

namespace oric {

// What the estimator regresses onto. kMoric is the default; kOric with the
// loss weighting off is the un-normalized "vanilla" variant; kMori and kOri
// are the per-image (context-free) baselines.
enum class TargetKind { kMoric, kOric, kMori, kOri };

const char* to_string(TargetKind kind) noexcept;
TargetKind target_kind_from_string(const std::string& name);

// Rank targets live in [0, 1]; raw targets are signed rewards.
inline bool is_rank_target(TargetKind kind) noexcept {
  return kind == TargetKind::kMoric || kind == TargetKind::kMori;
}

struct TrainConfig {
  std::vector<std::size_t> hidden{64, 32};
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  bool weighted = true;
  TargetKind target = TargetKind::kMoric;
  bool shuffle = true;
};

void validate(const TrainConfig& config);

// Stable FNV-1a hash of the canonical JSON form, as 16 hex digits.
std::string config_hash(const TrainConfig& config);

std::string train_config_to_json(const TrainConfig& config);
// Keys absent from the JSON keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const std::string& text);

// Momentum mini-batch descent on the weighted squared loss; each step uses the
// batch gradient divided by the batch size. Deterministic for a fixed seed,
// config and data.
MlpModel train(std::span<const FeatureVector> features, std::span<const double> targets,
               const TrainConfig& config);

// Targets for a training population: rank targets use the mid-rank CDF of the
// population itself.
std::vector<double> training_targets(std::span<const RewardRecord> rewards, TargetKind kind);

// Fold index per dataset position. Images are ordered by image id before the
// seeded shuffle, so the partition does not depend on input order; fold sizes
// differ by at most one.
std::vector<std::size_t> assign_folds(const Dataset& dataset, std::size_t folds, std::uint64_t seed);

struct FoldResult {
  MlpModel model;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  // Oracle rewards of the training images against the fold's own context.
  std::vector<RewardRecord> train_rewards;
};

struct CrossValidation {
  std::vector<FoldResult> folds;
  std::vector<std::size_t> fold_of;
  // Out-of-fold estimate per dataset position.
  std::vector<double> estimates;
};

// K-fold cross-validation. For each fold the context is sampled from the
// training images only (size capped at the training-set size) and targets are
// derived from training-fold rewards, so nothing about a test image reaches
// the model that predicts it.
CrossValidation cross_validate(const Dataset& dataset, const ContextSpec& context,
                               const TrainConfig& config, std::size_t folds = 5,
                               const RewardOptions& options = {});

}  // namespace oric
