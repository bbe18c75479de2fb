// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oric/dataset.hpp"

namespace oric {

using FeatureVector = std::vector<double>;

// Layout version 1. Per box, in descending score order (stable):
//   score, cx / W, cy / H, w / W, h / H, area / (W * H), class_id / (M - 1)
// followed by a global block:
//   detection count / K, mean score, max score (over all detections).
// Boxes beyond K are dropped; missing boxes are zero blocks.
struct FeatureConfig {
  std::size_t top_k = 25;
  int version = 1;
};

inline constexpr std::size_t kPerBoxFeatures = 7;
inline constexpr std::size_t kGlobalFeatures = 3;

std::size_t feature_dimension(const FeatureConfig& config = {});

FeatureVector extract_features(std::span<const Detection> weak_dets, double image_width,
                               double image_height, std::size_t num_classes,
                               const FeatureConfig& config = {});

// Weak-detector features for every image of the dataset, in dataset order.
std::vector<FeatureVector> extract_dataset_features(const Dataset& dataset,
                                                    const FeatureConfig& config = {});

}  // namespace oric
