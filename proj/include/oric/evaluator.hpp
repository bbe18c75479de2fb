// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "oric/dataset.hpp"

namespace oric {

enum class Interpolation {
  kAllPoint,     // area under the monotone precision envelope
  kElevenPoint,  // mean of the envelope sampled at recall 0, 0.1, ..., 1
};

struct EvalConfig {
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::kAllPoint;
};

struct ScoredHit {
  double score = 0.0;
  bool true_positive = false;

  friend bool operator==(const ScoredHit&, const ScoredHit&) = default;
};

// Matching outcome for one class over one or more images. `hits` is sorted by
// descending score; equal scores keep their input order.
struct ClassEvalState {
  ClassId class_id = 0;
  std::size_t num_ground_truth = 0;
  std::vector<bool> gt_matched;
  std::vector<ScoredHit> hits;

  std::size_t num_true_positives() const noexcept;

  friend bool operator==(const ClassEvalState&, const ClassEvalState&) = default;
};

// Per-class states ordered by class id. Classes with neither ground truth nor
// detections are absent.
using ClassStates = std::vector<ClassEvalState>;

const ClassEvalState* find_class(const ClassStates& states, ClassId id) noexcept;

// For every detection, the index of the ground truth it matched or -1.
struct MatchResult {
  std::vector<int> matched_truth;
  std::vector<bool> truth_matched;
};

// Greedy matching: detections visited by descending score (stable); each takes
// the unmatched same-class ground truth of highest IoU when that IoU reaches
// the threshold.
MatchResult match_detections(std::span<const GroundTruth> truths,
                             std::span<const Detection> dets, double iou_threshold);

ClassStates match_image(std::span<const GroundTruth> truths, std::span<const Detection> dets,
                        double iou_threshold = 0.5);

// AP of a ranked hit list against `num_ground_truth` instances. Empty when
// there is no ground truth; such a class must be skipped, never scored 0.
std::optional<double> average_precision(std::span<const ScoredHit> hits,
                                        std::size_t num_ground_truth,
                                        Interpolation interpolation = Interpolation::kAllPoint);

std::optional<double> average_precision(const ClassEvalState& state,
                                        Interpolation interpolation = Interpolation::kAllPoint);

// Unweighted mean of AP over classes with ground truth. Throws UndefinedMetric
// when no class has ground truth.
double mean_ap(const ClassStates& states, Interpolation interpolation = Interpolation::kAllPoint);

// As mean_ap, but empty instead of throwing.
std::optional<double> try_mean_ap(const ClassStates& states,
                                  Interpolation interpolation = Interpolation::kAllPoint);

struct ClassAp {
  ClassId class_id = 0;
  std::size_t num_ground_truth = 0;
  std::size_t num_detections = 0;
  std::optional<double> ap;
};

std::vector<ClassAp> per_class_ap(const ClassStates& states,
                                  Interpolation interpolation = Interpolation::kAllPoint);

// Concatenates per-image states in the given order and re-sorts each class by
// score with a stable sort.
ClassStates merge_states(std::span<const ClassStates> per_image);

// Pooled states for a set of images under one detector.
ClassStates evaluate_images(std::span<const ImageRecord> images, DetectorKind which,
                            double iou_threshold = 0.5);

// Selects the detector used for the context images. The first
// round(strong_fraction * |E|) images, in sample order, use the strong detector.
struct ContextDetectors {
  double strong_fraction = 0.0;
};

// Pooled weak-detector matching state over a context set E, with each class's
// context-only AP cached so that classes an image does not touch cost nothing.
class ContextState {
 public:
  ContextState() = default;
  ContextState(std::span<const ImageRecord> context_images, const EvalConfig& config = {},
               ContextDetectors detectors = {});

  std::size_t size() const noexcept { return size_; }
  const ClassStates& classes() const noexcept { return classes_; }
  const EvalConfig& config() const noexcept { return config_; }

  // mAP over {image} ∪ E with the image evaluated under `which`. Each class
  // the image touches is re-scored by merging its hits into the context list
  // (context first at equal score). Empty when {image} ∪ E has no ground truth.
  std::optional<double> mapc(const ImageRecord& image, DetectorKind which) const;

  // Same, from an already matched image.
  std::optional<double> mapc(const ClassStates& image_states) const;

  // Number of classes with ground truth in {image} ∪ E, i.e. the averaging
  // denominator of the last argument's mapc.
  std::size_t num_eval_classes(const ClassStates& image_states) const;

 private:
  std::size_t size_ = 0;
  EvalConfig config_;
  ClassStates classes_;
  std::vector<std::optional<double>> cached_ap_;
  std::vector<std::size_t> cached_tp_;
};

inline ContextState build_context(std::span<const ImageRecord> context_images,
                                  const EvalConfig& config = {}, ContextDetectors detectors = {}) {
  return ContextState(context_images, config, detectors);
}

// mAP restricted to the ground-truth classes of one image. Empty when the
// image has no ground truth.
std::optional<double> map_per_image(const ImageRecord& record, DetectorKind which,
                                    const EvalConfig& config = {});

}  // namespace oric
