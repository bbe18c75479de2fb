// SPDX-License-Identifier: Apache-2.0
#include "oric/evaluator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "oric/error.hpp"

namespace oric {
namespace {

// AP from a ranked list visited back to front. `next()` yields the hits from
// the lowest-ranked to the highest-ranked one. Walking backwards gives the
// running maximum of precision (the interpolation envelope) for free.
template <typename Next>
double ranked_ap(std::size_t n, std::size_t total_tp, std::size_t num_gt,
                 Interpolation interpolation, Next next) {
  std::size_t tp = total_tp;
  if (interpolation == Interpolation::kAllPoint) {
    double envelope = 0.0;
    double sum = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      const ScoredHit& hit = next();
      const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
      envelope = std::max(envelope, precision);
      if (hit.true_positive) {
        sum += envelope;
        --tp;
      }
    }
    return sum / static_cast<double>(num_gt);
  }
  // Best precision at any rank whose recall reaches j / 10.
  std::array<double, 11> best{};
  for (std::size_t k = n; k-- > 0;) {
    const ScoredHit& hit = next();
    const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
    const double recall = static_cast<double>(tp) / static_cast<double>(num_gt);
    for (std::size_t j = 0; j < best.size(); ++j) {
      if (recall >= static_cast<double>(j) / 10.0) best[j] = std::max(best[j], precision);
    }
    if (hit.true_positive) --tp;
  }
  double sum = 0.0;
  for (double b : best) sum += b;
  return sum / 11.0;
}

std::size_t count_tp(std::span<const ScoredHit> hits) {
  return static_cast<std::size_t>(
      std::count_if(hits.begin(), hits.end(), [](const ScoredHit& h) { return h.true_positive; }));
}

// AP of the stable merge of `context` and `image` (context first at equal
// score) without materializing the merged list.
double merged_ap(const ClassEvalState& context, std::size_t context_tp, const ClassEvalState& image,
                 Interpolation interpolation) {
  const std::size_t gt = context.num_ground_truth + image.num_ground_truth;
  const std::size_t n = context.hits.size() + image.hits.size();
  std::size_t ci = context.hits.size();
  std::size_t ii = image.hits.size();
  auto next = [&]() -> const ScoredHit& {
    // The later element of the forward merge: the lower score, or the image
    // element on a tie.
    if (ii == 0) return context.hits[--ci];
    if (ci == 0) return image.hits[--ii];
    if (context.hits[ci - 1].score < image.hits[ii - 1].score) return context.hits[--ci];
    return image.hits[--ii];
  };
  return ranked_ap(n, context_tp + image.num_true_positives(), gt, interpolation, next);
}

void stable_sort_hits(std::vector<ScoredHit>& hits) {
  std::stable_sort(hits.begin(), hits.end(),
                   [](const ScoredHit& a, const ScoredHit& b) { return a.score > b.score; });
}

}  // namespace

std::size_t ClassEvalState::num_true_positives() const noexcept {
  return count_tp(hits);
}

const ClassEvalState* find_class(const ClassStates& states, ClassId id) noexcept {
  auto it = std::lower_bound(states.begin(), states.end(), id,
                             [](const ClassEvalState& s, ClassId c) { return s.class_id < c; });
  return (it != states.end() && it->class_id == id) ? &*it : nullptr;
}

MatchResult match_detections(std::span<const GroundTruth> truths, std::span<const Detection> dets,
                             double iou_threshold) {
  MatchResult result;
  result.matched_truth.assign(dets.size(), -1);
  result.truth_matched.assign(truths.size(), false);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  for (std::size_t d : order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < truths.size(); ++g) {
      if (result.truth_matched[g] || truths[g].class_id != dets[d].class_id) continue;
      const double v = iou(dets[d].box, truths[g].box);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= iou_threshold) {
      result.matched_truth[d] = best;
      result.truth_matched[static_cast<std::size_t>(best)] = true;
    }
  }
  return result;
}

ClassStates match_image(std::span<const GroundTruth> truths, std::span<const Detection> dets,
                        double iou_threshold) {
  const MatchResult match = match_detections(truths, dets, iou_threshold);

  std::map<ClassId, ClassEvalState> by_class;
  auto state_for = [&](ClassId c) -> ClassEvalState& {
    auto [it, inserted] = by_class.try_emplace(c);
    if (inserted) it->second.class_id = c;
    return it->second;
  };
  for (std::size_t g = 0; g < truths.size(); ++g) {
    auto& s = state_for(truths[g].class_id);
    ++s.num_ground_truth;
    s.gt_matched.push_back(match.truth_matched[g]);
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  for (std::size_t d : order) {
    state_for(dets[d].class_id).hits.push_back({dets[d].score, match.matched_truth[d] >= 0});
  }

  ClassStates out;
  out.reserve(by_class.size());
  for (auto& [c, s] : by_class) out.push_back(std::move(s));
  return out;
}

std::optional<double> average_precision(std::span<const ScoredHit> hits, std::size_t num_ground_truth,
                                        Interpolation interpolation) {
  if (num_ground_truth == 0) return std::nullopt;
  std::size_t k = hits.size();
  return ranked_ap(hits.size(), count_tp(hits), num_ground_truth, interpolation,
                   [&]() -> const ScoredHit& { return hits[--k]; });
}

std::optional<double> average_precision(const ClassEvalState& state, Interpolation interpolation) {
  return average_precision(state.hits, state.num_ground_truth, interpolation);
}

std::optional<double> try_mean_ap(const ClassStates& states, Interpolation interpolation) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : states) {
    if (auto ap = average_precision(s, interpolation)) {
      sum += *ap;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

double mean_ap(const ClassStates& states, Interpolation interpolation) {
  auto v = try_mean_ap(states, interpolation);
  if (!v) throw UndefinedMetric("mAP undefined: no class has ground truth");
  return *v;
}

std::vector<ClassAp> per_class_ap(const ClassStates& states, Interpolation interpolation) {
  std::vector<ClassAp> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    out.push_back({s.class_id, s.num_ground_truth, s.hits.size(), average_precision(s, interpolation)});
  }
  return out;
}

ClassStates merge_states(std::span<const ClassStates> per_image) {
  std::map<ClassId, ClassEvalState> by_class;
  for (const auto& states : per_image) {
    for (const auto& s : states) {
      auto [it, inserted] = by_class.try_emplace(s.class_id);
      auto& dst = it->second;
      if (inserted) dst.class_id = s.class_id;
      dst.num_ground_truth += s.num_ground_truth;
      dst.gt_matched.insert(dst.gt_matched.end(), s.gt_matched.begin(), s.gt_matched.end());
      dst.hits.insert(dst.hits.end(), s.hits.begin(), s.hits.end());
    }
  }
  ClassStates out;
  out.reserve(by_class.size());
  for (auto& [c, s] : by_class) {
    stable_sort_hits(s.hits);
    out.push_back(std::move(s));
  }
  return out;
}

ClassStates evaluate_images(std::span<const ImageRecord> images, DetectorKind which,
                            double iou_threshold) {
  std::vector<ClassStates> per_image;
  per_image.reserve(images.size());
  for (const auto& img : images) per_image.push_back(match_image(img.truths, img.detections(which), iou_threshold));
  return merge_states(per_image);
}

ContextState::ContextState(std::span<const ImageRecord> context_images, const EvalConfig& config,
                           ContextDetectors detectors)
    : size_(context_images.size()), config_(config) {
  const double strong = std::clamp(detectors.strong_fraction, 0.0, 1.0);
  const auto num_strong = static_cast<std::size_t>(std::floor(strong * static_cast<double>(size_) + 0.5));
  std::vector<ClassStates> per_image;
  per_image.reserve(size_);
  for (std::size_t k = 0; k < size_; ++k) {
    const auto& img = context_images[k];
    const DetectorKind which = k < num_strong ? DetectorKind::kStrong : DetectorKind::kWeak;
    per_image.push_back(match_image(img.truths, img.detections(which), config_.iou_threshold));
  }
  classes_ = merge_states(per_image);
  cached_ap_.reserve(classes_.size());
  cached_tp_.reserve(classes_.size());
  for (const auto& s : classes_) {
    cached_ap_.push_back(average_precision(s, config_.interpolation));
    cached_tp_.push_back(s.num_true_positives());
  }
}

std::optional<double> ContextState::mapc(const ImageRecord& image, DetectorKind which) const {
  return mapc(match_image(image.truths, image.detections(which), config_.iou_threshold));
}

std::optional<double> ContextState::mapc(const ClassStates& image_states) const {
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t ci = 0;
  std::size_t ii = 0;
  auto add = [&](std::optional<double> ap) {
    if (ap) {
      sum += *ap;
      ++count;
    }
  };
  while (ci < classes_.size() || ii < image_states.size()) {
    const bool take_ctx =
        ii == image_states.size() ||
        (ci < classes_.size() && classes_[ci].class_id < image_states[ii].class_id);
    const bool take_img =
        ci == classes_.size() ||
        (ii < image_states.size() && image_states[ii].class_id < classes_[ci].class_id);
    if (take_ctx) {
      add(cached_ap_[ci++]);
    } else if (take_img) {
      const auto& img = image_states[ii++];
      add(average_precision(img, config_.interpolation));
    } else {
      const auto& ctx = classes_[ci];
      const auto& img = image_states[ii];
      if (ctx.num_ground_truth + img.num_ground_truth > 0) {
        add(merged_ap(ctx, cached_tp_[ci], img, config_.interpolation));
      }
      ++ci;
      ++ii;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

std::size_t ContextState::num_eval_classes(const ClassStates& image_states) const {
  std::size_t count = 0;
  for (const auto& s : classes_) {
    const auto* img = find_class(image_states, s.class_id);
    if (s.num_ground_truth + (img ? img->num_ground_truth : 0) > 0) ++count;
  }
  for (const auto& s : image_states) {
    if (!find_class(classes_, s.class_id) && s.num_ground_truth > 0) ++count;
  }
  return count;
}

std::optional<double> map_per_image(const ImageRecord& record, DetectorKind which,
                                    const EvalConfig& config) {
  return ContextState({}, config).mapc(record, which);
}

}  // namespace oric
