// SPDX-License-Identifier: Apache-2.0
#include "oric/policy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "oric/error.hpp"
#include "oric/format.hpp"
#include "oric/rng.hpp"

namespace oric {

std::size_t budget_for_ratio(double ratio, std::size_t n) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw InvalidArgument("offloading ratio must be in [0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
  return std::min(k, n);
}

OffloadPlan threshold_plan(std::span<const ScoredImage> scores, double ratio) {
  const std::size_t k = budget_for_ratio(ratio, scores.size());
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw InvalidArgument("non-finite score for image " + std::to_string(s.image_id));
  }
  std::vector<ScoredImage> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredImage& a, const ScoredImage& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.image_id < b.image_id;
  });
  OffloadPlan plan;
  plan.ratio = ratio;
  if (k > 0) plan.threshold = sorted[k - 1].score;
  for (std::size_t i = 0; i < k; ++i) plan.offloaded.push_back(sorted[i].image_id);
  std::sort(plan.offloaded.begin(), plan.offloaded.end());
  return plan;
}

SystemEvaluator::SystemEvaluator(const Dataset& dataset, const EvalConfig& config) : config_(config) {
  ids_.reserve(dataset.size());
  weak_.reserve(dataset.size());
  strong_.reserve(dataset.size());
  for (const auto& img : dataset.images) {
    ids_.push_back(img.image_id);
    weak_.push_back(match_image(img.truths, img.weak, config.iou_threshold));
    strong_.push_back(match_image(img.truths, img.strong, config.iou_threshold));
  }
  weak_map_ = system_map(std::vector<bool>(ids_.size(), false));
  strong_map_ = system_map(std::vector<bool>(ids_.size(), true));
}

double SystemEvaluator::system_map(const std::vector<bool>& offload) const {
  std::vector<std::size_t> all(ids_.size());
  std::iota(all.begin(), all.end(), 0);
  return system_map(offload, all);
}

double SystemEvaluator::system_map(const std::vector<bool>& offload,
                                   std::span<const std::size_t> subset) const {
  if (offload.size() != ids_.size()) throw InvalidArgument("offload mask size mismatch");
  std::vector<ClassStates> chosen;
  chosen.reserve(subset.size());
  for (std::size_t i : subset) chosen.push_back(offload[i] ? strong_[i] : weak_[i]);
  return mean_ap(merge_states(chosen), config_.interpolation);
}

std::vector<bool> SystemEvaluator::mask(const OffloadPlan& plan) const {
  std::unordered_map<ImageId, std::size_t> index;
  for (std::size_t i = 0; i < ids_.size(); ++i) index.emplace(ids_[i], i);
  std::vector<bool> m(ids_.size(), false);
  for (ImageId id : plan.offloaded) {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError("plan references unknown image_id " + std::to_string(id));
    m[it->second] = true;
  }
  return m;
}

double SystemEvaluator::system_map(const OffloadPlan& plan) const { return system_map(mask(plan)); }

double SystemEvaluator::normalized(double map) const {
  const double span = strong_map_ - weak_map_;
  if (span == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (map - weak_map_) / span;
}

double system_map(const Dataset& dataset, const OffloadPlan& plan, const EvalConfig& config) {
  return SystemEvaluator(dataset, config).system_map(plan);
}

OffloadPlan oracle_best_subset(const Dataset& dataset, std::size_t budget, const EvalConfig& config) {
  const std::size_t n = dataset.size();
  if (n > kOracleMaxImages) {
    throw InvalidArgument("exhaustive oracle limited to " + std::to_string(kOracleMaxImages) +
                          " images (got " + std::to_string(n) +
                          "); use a threshold plan over oracle ORIC rewards instead");
  }
  budget = std::min(budget, n);
  const SystemEvaluator eval(dataset, config);

  std::vector<bool> mask(n, false);
  std::vector<std::size_t> current, best;
  double best_map = -1.0;
  // Depth-first in lexicographic order of sorted index sequences; a strict
  // improvement is required to replace the incumbent.
  std::function<void(std::size_t)> visit = [&](std::size_t start) {
    const double m = eval.system_map(mask);
    if (m > best_map) {
      best_map = m;
      best = current;
    }
    if (current.size() == budget) return;
    for (std::size_t i = start; i < n; ++i) {
      mask[i] = true;
      current.push_back(i);
      visit(i + 1);
      current.pop_back();
      mask[i] = false;
    }
  };
  visit(0);

  OffloadPlan plan;
  plan.ratio = static_cast<double>(best.size()) / static_cast<double>(n);
  for (std::size_t i : best) plan.offloaded.push_back(dataset.images[i].image_id);
  std::sort(plan.offloaded.begin(), plan.offloaded.end());
  return plan;
}

OffloadPlan baseline_random(const Dataset& dataset, double ratio, std::uint64_t seed) {
  const std::size_t k = budget_for_ratio(ratio, dataset.size());
  Rng rng(seed);
  OffloadPlan plan;
  plan.ratio = ratio;
  for (std::size_t i : sample_without_replacement(dataset.size(), k, rng)) {
    plan.offloaded.push_back(dataset.images[i].image_id);
  }
  std::sort(plan.offloaded.begin(), plan.offloaded.end());
  return plan;
}

std::size_t dcsb_object_count(std::span<const Detection> dets, double score_cutoff) {
  return static_cast<std::size_t>(std::count_if(
      dets.begin(), dets.end(), [&](const Detection& d) { return d.score >= score_cutoff; }));
}

double dcsb_min_area(const ImageRecord& image, double score_cutoff) {
  double best = std::numeric_limits<double>::infinity();
  const double extent = image.width * image.height;
  for (const auto& d : image.weak) {
    if (d.score >= score_cutoff) best = std::min(best, d.box.area() / extent);
  }
  return best;
}

bool dcsb_offloads(const ImageRecord& image, const DcsbThresholds& t) {
  const auto count = static_cast<double>(dcsb_object_count(image.weak, t.score_cutoff));
  return count >= t.count_threshold || dcsb_min_area(image, t.score_cutoff) < t.min_area_threshold;
}

bool dcsb_label(const ImageRecord& image, double score_cutoff) {
  return dcsb_object_count(image.strong, score_cutoff) > dcsb_object_count(image.weak, score_cutoff);
}

double dcsb_accuracy(std::span<const ImageRecord> images, const DcsbThresholds& thresholds) {
  if (images.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& img : images) {
    if (dcsb_offloads(img, thresholds) == dcsb_label(img, thresholds.score_cutoff)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

DcsbFit fit_dcsb(std::span<const ImageRecord> images, double score_cutoff) {
  const std::size_t n = images.size();
  std::vector<double> counts(n), areas(n);
  std::vector<bool> labels(n);
  std::size_t max_count = 0;
  std::set<double> area_grid{0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = dcsb_object_count(images[i].weak, score_cutoff);
    max_count = std::max(max_count, c);
    counts[i] = static_cast<double>(c);
    areas[i] = dcsb_min_area(images[i], score_cutoff);
    labels[i] = dcsb_label(images[i], score_cutoff);
    if (std::isfinite(areas[i])) area_grid.insert(std::nextafter(areas[i], std::numeric_limits<double>::infinity()));
  }
  std::vector<double> count_grid;
  for (std::size_t c = 0; c <= max_count + 1; ++c) count_grid.push_back(static_cast<double>(c));
  count_grid.push_back(std::numeric_limits<double>::infinity());

  DcsbFit best;
  best.thresholds.score_cutoff = score_cutoff;
  best.accuracy = -1.0;
  for (double ct : count_grid) {
    for (double at : area_grid) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool offload = counts[i] >= ct || areas[i] < at;
        if (offload == labels[i]) ++correct;
      }
      const double acc = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
      if (acc > best.accuracy) {
        best.accuracy = acc;
        best.thresholds.count_threshold = ct;
        best.thresholds.min_area_threshold = at;
      }
    }
  }
  return best;
}

OffloadPlan baseline_dcsb(const Dataset& dataset, const DcsbThresholds& thresholds) {
  OffloadPlan plan;
  for (const auto& img : dataset.images) {
    if (dcsb_offloads(img, thresholds)) plan.offloaded.push_back(img.image_id);
  }
  std::sort(plan.offloaded.begin(), plan.offloaded.end());
  plan.ratio = static_cast<double>(plan.offloaded.size()) / static_cast<double>(dataset.size());
  return plan;
}

std::string results_to_csv(std::span<const PolicyResult> results) {
  std::ostringstream out;
  out << "policy,ratio,seed,map,normalized_map\n";
  for (const auto& r : results) {
    out << r.policy << ',' << format_number(r.ratio) << ',' << r.seed << ',' << format_number(r.map) << ','
        << format_number(r.normalized_map) << '\n';
  }
  return out.str();
}

}  // namespace oric
