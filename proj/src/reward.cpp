// SPDX-License-Identifier: Apache-2.0
#include "oric/reward.hpp"

#include <algorithm>

#include "oric/error.hpp"
#include "oric/parallel.hpp"
#include "oric/rng.hpp"
#include "oric/stats.hpp"

namespace oric {

std::vector<std::size_t> sample_context_indices(std::size_t n, const ContextSpec& spec) {
  if (spec.size > n) {
    throw InvalidArgument("context size " + std::to_string(spec.size) + " exceeds the " +
                          std::to_string(n) + " available images");
  }
  Rng rng(spec.seed);
  return sample_without_replacement(n, spec.size, rng);
}

std::vector<ImageRecord> sample_context(std::span<const ImageRecord> source, const ContextSpec& spec) {
  std::vector<ImageRecord> out;
  for (std::size_t i : sample_context_indices(source.size(), spec)) out.push_back(source[i]);
  return out;
}

namespace {

ImageReward reward_from_states(const ClassStates& weak, const ClassStates& strong,
                               const ContextState& context, const ContextState& empty) {
  ImageReward r;
  const auto mapi_w = empty.mapc(weak);
  const auto mapi_s = empty.mapc(strong);
  r.no_ground_truth = !mapi_w.has_value();
  r.ori = mapi_s.value_or(0.0) - mapi_w.value_or(0.0);
  const auto mapc_w = context.mapc(weak);
  const auto mapc_s = context.mapc(strong);
  r.oric_unscaled = mapc_s.value_or(0.0) - mapc_w.value_or(0.0);
  r.oric = static_cast<double>(context.size() + 1) * r.oric_unscaled;
  return r;
}

}  // namespace

double ori(const ImageRecord& record, const EvalConfig& config) {
  const auto weak = map_per_image(record, DetectorKind::kWeak, config);
  const auto strong = map_per_image(record, DetectorKind::kStrong, config);
  return strong.value_or(0.0) - weak.value_or(0.0);
}

double oric(const ImageRecord& record, const ContextState& context) {
  const auto weak = context.mapc(record, DetectorKind::kWeak);
  const auto strong = context.mapc(record, DetectorKind::kStrong);
  return static_cast<double>(context.size() + 1) * (strong.value_or(0.0) - weak.value_or(0.0));
}

ImageReward image_reward(const ImageRecord& record, const ContextState& context) {
  const double thr = context.config().iou_threshold;
  const ContextState empty({}, context.config());
  return reward_from_states(match_image(record.truths, record.weak, thr),
                            match_image(record.truths, record.strong, thr), context, empty);
}

EmpiricalCdf::EmpiricalCdf(std::span<const double> population)
    : sorted_(population.begin(), population.end()) {
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double value) const {
  if (sorted_.empty()) return 0.0;
  const auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), value);
  const auto hi = std::upper_bound(lo, sorted_.end(), value);
  const auto less = static_cast<double>(lo - sorted_.begin());
  const auto equal = static_cast<double>(hi - lo);
  const auto n = static_cast<double>(sorted_.size());
  if (equal == 0.0) return less / n;
  // Mid-rank of the tie block: ((less + 1) + (less + equal)) / (2N).
  return (2.0 * less + equal + 1.0) / (2.0 * n);
}

std::vector<double> moric(std::span<const double> rewards) {
  const auto ranks = mid_ranks(rewards);
  const auto n = static_cast<double>(rewards.size());
  std::vector<double> out(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) out[i] = ranks[i] / n;
  return out;
}

std::vector<RewardRecord> compute_rewards(std::span<const ImageRecord> images,
                                          const ContextState& context, unsigned threads) {
  std::vector<RewardRecord> out(images.size());
  const ContextState empty({}, context.config());
  const double thr = context.config().iou_threshold;
  parallel_for(images.size(), worker_count(threads), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& img = images[i];
      const ImageReward r = reward_from_states(match_image(img.truths, img.weak, thr),
                                               match_image(img.truths, img.strong, thr), context, empty);
      out[i].image_id = img.image_id;
      out[i].ori = r.ori;
      out[i].oric = r.oric;
      out[i].oric_unscaled = r.oric_unscaled;
      out[i].no_ground_truth = r.no_ground_truth;
    }
  });
  if (!out.empty()) {
    std::vector<double> values(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) values[i] = out[i].oric;
    const auto ranks = moric(values);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].moric = ranks[i];
  }
  return out;
}

std::vector<RewardRecord> compute_rewards(const Dataset& dataset, const ContextSpec& spec,
                                          const RewardOptions& options) {
  const auto context_images = sample_context(dataset.images, spec);
  const ContextState context(context_images, options.eval, options.context_detectors);
  return compute_rewards(dataset.images, context, options.threads);
}

}  // namespace oric
