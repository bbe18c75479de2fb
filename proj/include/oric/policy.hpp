// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "oric/dataset.hpp"
#include "oric/evaluator.hpp"

namespace oric {

struct ScoredImage {
  ImageId image_id = 0;
  double score = 0.0;
};

struct OffloadPlan {
  double ratio = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
  std::vector<ImageId> offloaded;  // ascending image id
};

// round(r * n), halves rounded up.
std::size_t budget_for_ratio(double ratio, std::size_t n);

// Offloads the round(r * N) highest scores. T is the nearest-rank (1 - r)
// quantile, i.e. the lowest admitted score; ties at T are admitted in
// ascending image id order until the budget is used.
OffloadPlan threshold_plan(std::span<const ScoredImage> scores, double ratio);

// Caches each image's weak and strong matching so that any offloading plan
// costs one merge per class.
class SystemEvaluator {
 public:
  explicit SystemEvaluator(const Dataset& dataset, const EvalConfig& config = {});

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<ImageId>& image_ids() const noexcept { return ids_; }

  // mAP of the composed assignment: strong detections where offload[i].
  double system_map(const std::vector<bool>& offload) const;
  double system_map(const OffloadPlan& plan) const;
  // Restricted to the images at `subset` (dataset positions).
  double system_map(const std::vector<bool>& offload, std::span<const std::size_t> subset) const;

  double weak_map() const { return weak_map_; }
  double strong_map() const { return strong_map_; }

  // (mAP - weak) / (strong - weak); NaN when the two detectors tie.
  double normalized(double map) const;

  std::vector<bool> mask(const OffloadPlan& plan) const;

 private:
  EvalConfig config_;
  std::vector<ImageId> ids_;
  std::vector<ClassStates> weak_;
  std::vector<ClassStates> strong_;
  double weak_map_ = 0.0;
  double strong_map_ = 0.0;
};

double system_map(const Dataset& dataset, const OffloadPlan& plan, const EvalConfig& config = {});

inline constexpr std::size_t kOracleMaxImages = 20;

// Exhaustive search over every subset of size <= budget. Ties keep the
// lexicographically smallest subset of dataset positions.
OffloadPlan oracle_best_subset(const Dataset& dataset, std::size_t budget, const EvalConfig& config = {});

OffloadPlan baseline_random(const Dataset& dataset, double ratio, std::uint64_t seed);

// Rule: offload when the weak detector reports at least `count_threshold`
// objects, or when its smallest box covers less than `min_area_threshold` of
// the image. Only detections scoring at least `score_cutoff` count as objects.
// With no detections the area rule never fires.
struct DcsbThresholds {
  double count_threshold = std::numeric_limits<double>::infinity();
  double min_area_threshold = 0.0;
  double score_cutoff = 0.5;
};

std::size_t dcsb_object_count(std::span<const Detection> dets, double score_cutoff);
// Smallest box area as a fraction of the image; +inf with no counted objects.
double dcsb_min_area(const ImageRecord& image, double score_cutoff);
bool dcsb_offloads(const ImageRecord& image, const DcsbThresholds& thresholds);

// Training label: does the strong detector report more objects than the weak one?
bool dcsb_label(const ImageRecord& image, double score_cutoff);

struct DcsbFit {
  DcsbThresholds thresholds;
  double accuracy = 0.0;
};

// Grid search maximizing the accuracy of dcsb_offloads against dcsb_label.
// Count grid: 0 .. max count + 1 and infinity. Area grid: 0, every observed
// smallest-area value nudged up by one ulp, and 1.
DcsbFit fit_dcsb(std::span<const ImageRecord> images, double score_cutoff = 0.5);

// Accuracy of one threshold pair.
double dcsb_accuracy(std::span<const ImageRecord> images, const DcsbThresholds& thresholds);

OffloadPlan baseline_dcsb(const Dataset& dataset, const DcsbThresholds& thresholds);

struct PolicyResult {
  std::string policy;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  double map = 0.0;
  double normalized_map = 0.0;
};

// CSV with header policy,ratio,seed,map,normalized_map.
std::string results_to_csv(std::span<const PolicyResult> results);

}  // namespace oric
