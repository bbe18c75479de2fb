// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oric/dataset.hpp"
#include "oric/evaluator.hpp"
#include "oric/reward_io.hpp"

namespace oric {

inline constexpr std::size_t kDefaultContextSize = 1000;

struct ContextSpec {
  std::size_t size = kDefaultContextSize;
  std::uint64_t seed = 0;
};

// Uniform sample without replacement, in draw order. Throws InvalidArgument
// when spec.size exceeds n.
std::vector<std::size_t> sample_context_indices(std::size_t n, const ContextSpec& spec);

std::vector<ImageRecord> sample_context(std::span<const ImageRecord> source, const ContextSpec& spec);

struct RewardOptions {
  EvalConfig eval;
  ContextDetectors context_detectors;
  unsigned threads = 0;
};

struct ImageReward {
  double ori = 0.0;
  double oric = 0.0;
  double oric_unscaled = 0.0;
  bool no_ground_truth = false;
};

// Strong-minus-weak per-image mAP. An image without ground truth scores 0 on
// both sides.
double ori(const ImageRecord& record, const EvalConfig& config = {});

// (|E| + 1) * (mAPC_strong - mAPC_weak) against the given context.
double oric(const ImageRecord& record, const ContextState& context);

ImageReward image_reward(const ImageRecord& record, const ContextState& context);

// Empirical CDF with mid-ranks for values in the population. A value outside
// the population maps to the fraction of the population strictly below it.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  explicit EmpiricalCdf(std::span<const double> population);

  double operator()(double value) const;
  std::size_t size() const noexcept { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

// Mid-rank CDF transform of a batch onto (0, 1]: (rank_low + rank_high) / (2N).
std::vector<double> moric(std::span<const double> rewards);

// Rewards for `images` against `context`, with MORIC taken over this batch.
std::vector<RewardRecord> compute_rewards(std::span<const ImageRecord> images,
                                          const ContextState& context, unsigned threads = 0);

// Samples the context from `dataset` and computes rewards for every image.
std::vector<RewardRecord> compute_rewards(const Dataset& dataset, const ContextSpec& spec,
                                          const RewardOptions& options = {});

}  // namespace oric
