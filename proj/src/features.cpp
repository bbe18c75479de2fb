// SPDX-License-Identifier: Apache-2.0
#include "oric/features.hpp"

#include <algorithm>
#include <numeric>

#include "oric/error.hpp"

namespace oric {

std::size_t feature_dimension(const FeatureConfig& config) {
  return config.top_k * kPerBoxFeatures + kGlobalFeatures;
}

FeatureVector extract_features(std::span<const Detection> weak_dets, double image_width,
                               double image_height, std::size_t num_classes,
                               const FeatureConfig& config) {
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw InvalidArgument("image extent must be positive");
  }
  FeatureVector f(feature_dimension(config), 0.0);

  std::vector<std::size_t> order(weak_dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return weak_dets[a].score > weak_dets[b].score;
  });

  const double class_scale = num_classes > 1 ? 1.0 / static_cast<double>(num_classes - 1) : 0.0;
  const std::size_t kept = std::min(order.size(), config.top_k);
  for (std::size_t k = 0; k < kept; ++k) {
    const Detection& d = weak_dets[order[k]];
    double* block = f.data() + k * kPerBoxFeatures;
    block[0] = d.score;
    block[1] = (d.box.x + d.box.w / 2.0) / image_width;
    block[2] = (d.box.y + d.box.h / 2.0) / image_height;
    block[3] = d.box.w / image_width;
    block[4] = d.box.h / image_height;
    block[5] = d.box.area() / (image_width * image_height);
    block[6] = static_cast<double>(d.class_id) * class_scale;
  }

  double* global = f.data() + config.top_k * kPerBoxFeatures;
  if (!weak_dets.empty()) {
    double sum = 0.0, best = 0.0;
    // Sum in score order so the result does not depend on input order.
    for (std::size_t i : order) {
      sum += weak_dets[i].score;
      best = std::max(best, weak_dets[i].score);
    }
    global[0] = static_cast<double>(weak_dets.size()) / static_cast<double>(config.top_k);
    global[1] = sum / static_cast<double>(weak_dets.size());
    global[2] = best;
  }
  return f;
}

std::vector<FeatureVector> extract_dataset_features(const Dataset& dataset, const FeatureConfig& config) {
  std::vector<FeatureVector> out;
  out.reserve(dataset.size());
  for (const auto& img : dataset.images) {
    out.push_back(extract_features(img.weak, img.width, img.height, dataset.num_classes(), config));
  }
  return out;
}

}  // namespace oric
