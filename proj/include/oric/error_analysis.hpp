// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oric/dataset.hpp"
#include "oric/evaluator.hpp"

namespace oric {

enum class ErrorCategory { kClassification, kLocalization, kBoth, kDuplicate, kBackground, kMissed };

inline constexpr std::array<ErrorCategory, 6> kErrorCategories{
    ErrorCategory::kClassification, ErrorCategory::kLocalization, ErrorCategory::kBoth,
    ErrorCategory::kDuplicate,      ErrorCategory::kBackground,   ErrorCategory::kMissed};

const char* to_string(ErrorCategory category) noexcept;

struct ErrorThresholds {
  double fg_iou = 0.5;
  double bg_iou = 0.1;
};

struct DetectionOutcome {
  std::optional<ErrorCategory> category;  // empty for a true positive
  int target_truth = -1;                  // ground truth the error is attributed to
};

struct Categorization {
  std::vector<DetectionOutcome> detections;
  std::vector<std::size_t> missed_truths;
};

// Every non-true-positive detection gets exactly one category, tested in this
// order: background (max IoU < bg over all truths), classification (IoU >= fg
// with a wrong-class truth), duplicate (IoU >= fg with an already matched
// right-class truth), localization (right class, IoU in [bg, fg)), both (wrong
// class, IoU in [bg, fg)). A truth left unmatched and not targeted by a
// classification, localization or both error is a missed ground truth.
Categorization categorize(std::span<const GroundTruth> truths, std::span<const Detection> dets,
                          const ErrorThresholds& thresholds = {});

struct EvalImage {
  std::vector<GroundTruth> truths;
  std::vector<Detection> dets;
};

// Fixes one category in isolation and returns max(0, fixed mAP - mAP).
// Classification relabels, localization snaps the box, both does the two; only
// the highest-scoring error per target truth is corrected and the rest are
// removed, as are errors whose target is already matched. Duplicate and
// background detections are removed; missed truths leave the denominator.
double category_impact(std::span<const EvalImage> images, ErrorCategory category,
                       const ErrorThresholds& thresholds = {}, const EvalConfig& config = {});

// The same fix without the floor, for auditing.
double category_delta(std::span<const EvalImage> images, ErrorCategory category,
                      const ErrorThresholds& thresholds = {}, const EvalConfig& config = {});

using ErrorBreakdown = std::array<double, 6>;

ErrorBreakdown error_breakdown(std::span<const EvalImage> images, const ErrorThresholds& thresholds = {},
                               const EvalConfig& config = {});

// Images under a detector assignment: strong where `offload[i]`.
std::vector<EvalImage> eval_images(const Dataset& dataset, const std::vector<bool>& offload);

}  // namespace oric
