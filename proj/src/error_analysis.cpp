// SPDX-License-Identifier: Apache-2.0
#include "oric/error_analysis.hpp"

#include <algorithm>
#include <map>

#include "oric/error.hpp"

namespace oric {
namespace {

double pooled_map(std::span<const EvalImage> images, const EvalConfig& config) {
  std::vector<ClassStates> per_image;
  per_image.reserve(images.size());
  for (const auto& img : images) per_image.push_back(match_image(img.truths, img.dets, config.iou_threshold));
  return mean_ap(merge_states(per_image), config.interpolation);
}

EvalImage fix_image(const EvalImage& image, ErrorCategory category, const ErrorThresholds& thresholds) {
  const Categorization cat = categorize(image.truths, image.dets, thresholds);
  EvalImage fixed;

  if (category == ErrorCategory::kMissed) {
    std::vector<bool> drop(image.truths.size(), false);
    for (std::size_t g : cat.missed_truths) drop[g] = true;
    for (std::size_t g = 0; g < image.truths.size(); ++g) {
      if (!drop[g]) fixed.truths.push_back(image.truths[g]);
    }
    fixed.dets = image.dets;
    return fixed;
  }

  fixed.truths = image.truths;
  const bool corrects =
      category == ErrorCategory::kClassification || category == ErrorCategory::kLocalization ||
      category == ErrorCategory::kBoth;

  // Truths already claimed by a true positive.
  std::vector<bool> claimed(image.truths.size(), false);
  for (const auto& o : cat.detections) {
    if (!o.category && o.target_truth >= 0) claimed[static_cast<std::size_t>(o.target_truth)] = true;
  }
  // Highest-scoring error of this category per target; first wins on ties.
  std::map<int, std::size_t> winner;
  if (corrects) {
    for (std::size_t d = 0; d < image.dets.size(); ++d) {
      const auto& o = cat.detections[d];
      if (o.category != category || claimed[static_cast<std::size_t>(o.target_truth)]) continue;
      auto it = winner.find(o.target_truth);
      if (it == winner.end() || image.dets[d].score > image.dets[it->second].score) winner[o.target_truth] = d;
    }
  }

  for (std::size_t d = 0; d < image.dets.size(); ++d) {
    const auto& o = cat.detections[d];
    if (o.category != category) {
      fixed.dets.push_back(image.dets[d]);
      continue;
    }
    if (!corrects) continue;  // duplicate / background: removed
    auto it = winner.find(o.target_truth);
    if (it == winner.end() || it->second != d) continue;
    Detection det = image.dets[d];
    const GroundTruth& gt = image.truths[static_cast<std::size_t>(o.target_truth)];
    if (category != ErrorCategory::kLocalization) det.class_id = gt.class_id;
    if (category != ErrorCategory::kClassification) det.box = gt.box;
    fixed.dets.push_back(det);
  }
  return fixed;
}

}  // namespace

const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kClassification: return "classification";
    case ErrorCategory::kLocalization: return "localization";
    case ErrorCategory::kBoth: return "both";
    case ErrorCategory::kDuplicate: return "duplicate";
    case ErrorCategory::kBackground: return "background";
    case ErrorCategory::kMissed: return "missed";
  }
  return "unknown";
}

Categorization categorize(std::span<const GroundTruth> truths, std::span<const Detection> dets,
                          const ErrorThresholds& thresholds) {
  const MatchResult match = match_detections(truths, dets, thresholds.fg_iou);
  Categorization out;
  out.detections.resize(dets.size());
  std::vector<bool> targeted(truths.size(), false);

  for (std::size_t d = 0; d < dets.size(); ++d) {
    auto& o = out.detections[d];
    if (match.matched_truth[d] >= 0) {
      o.target_truth = match.matched_truth[d];
      continue;
    }
    double same_best = 0.0, other_best = 0.0;
    int same_idx = -1, other_idx = -1;
    for (std::size_t g = 0; g < truths.size(); ++g) {
      const double v = iou(dets[d].box, truths[g].box);
      if (truths[g].class_id == dets[d].class_id) {
        if (v > same_best) {
          same_best = v;
          same_idx = static_cast<int>(g);
        }
      } else if (v > other_best) {
        other_best = v;
        other_idx = static_cast<int>(g);
      }
    }
    const double fg = thresholds.fg_iou, bg = thresholds.bg_iou;
    if (std::max(same_best, other_best) < bg) {
      o.category = ErrorCategory::kBackground;
    } else if (other_best >= fg) {
      o.category = ErrorCategory::kClassification;
      o.target_truth = other_idx;
    } else if (same_best >= fg) {
      o.category = ErrorCategory::kDuplicate;
      o.target_truth = same_idx;
    } else if (same_best >= bg) {
      o.category = ErrorCategory::kLocalization;
      o.target_truth = same_idx;
    } else {
      o.category = ErrorCategory::kBoth;
      o.target_truth = other_idx;
    }
    if (o.category != ErrorCategory::kDuplicate && o.target_truth >= 0) {
      targeted[static_cast<std::size_t>(o.target_truth)] = true;
    }
  }
  for (std::size_t g = 0; g < truths.size(); ++g) {
    if (!match.truth_matched[g] && !targeted[g]) out.missed_truths.push_back(g);
  }
  return out;
}

double category_delta(std::span<const EvalImage> images, ErrorCategory category,
                      const ErrorThresholds& thresholds, const EvalConfig& config) {
  const double original = pooled_map(images, config);
  std::vector<EvalImage> fixed;
  fixed.reserve(images.size());
  for (const auto& img : images) fixed.push_back(fix_image(img, category, thresholds));
  auto states = std::vector<ClassStates>{};
  for (const auto& img : fixed) states.push_back(match_image(img.truths, img.dets, config.iou_threshold));
  // Removing every missed truth can leave nothing to score: nothing to fix then.
  const auto after = try_mean_ap(merge_states(states), config.interpolation);
  return after ? *after - original : 0.0;
}

double category_impact(std::span<const EvalImage> images, ErrorCategory category,
                       const ErrorThresholds& thresholds, const EvalConfig& config) {
  return std::max(0.0, category_delta(images, category, thresholds, config));
}

ErrorBreakdown error_breakdown(std::span<const EvalImage> images, const ErrorThresholds& thresholds,
                               const EvalConfig& config) {
  ErrorBreakdown out{};
  for (std::size_t k = 0; k < kErrorCategories.size(); ++k) {
    out[k] = category_impact(images, kErrorCategories[k], thresholds, config);
  }
  return out;
}

std::vector<EvalImage> eval_images(const Dataset& dataset, const std::vector<bool>& offload) {
  if (offload.size() != dataset.size()) throw InvalidArgument("offload mask size mismatch");
  std::vector<EvalImage> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& img = dataset.images[i];
    out.push_back({img.truths, offload[i] ? img.strong : img.weak});
  }
  return out;
}

}  // namespace oric
