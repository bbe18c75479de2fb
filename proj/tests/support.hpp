// SPDX-License-Identifier: Apache-2.0
// Builders and random instance generators shared by the tests.
#pragma once

#include <vector>

#include "oric/dataset.hpp"
#include "oric/rng.hpp"

namespace oric::test {

inline BoundingBox box(double x, double y, double w, double h) { return {x, y, w, h}; }

inline GroundTruth gt(ClassId c, double x, double y, double w, double h) { return {box(x, y, w, h), c}; }

inline Detection det(ClassId c, double score, double x, double y, double w, double h) {
  return {box(x, y, w, h), c, score};
}

inline ImageRecord image(ImageId id, std::vector<GroundTruth> truths, std::vector<Detection> weak,
                         std::vector<Detection> strong = {}) {
  ImageRecord r;
  r.image_id = id;
  r.width = 100;
  r.height = 100;
  r.truths = std::move(truths);
  r.weak = std::move(weak);
  r.strong = std::move(strong);
  return r;
}

inline Dataset dataset(std::vector<ImageRecord> images, std::size_t num_classes) {
  Dataset d;
  for (std::size_t c = 0; c < num_classes; ++c) {
    d.classes.push_back("c" + std::to_string(c));
    d.category_ids.push_back(static_cast<std::int64_t>(c) + 1);
  }
  d.images = std::move(images);
  return d;
}

// Scores drawn from a coarse grid half of the time so ties are common.
inline double random_score(Rng& rng) {
  const double s = rng.uniform();
  return rng.bernoulli(0.5) ? static_cast<double>(static_cast<int>(s * 5)) / 5.0 : s;
}

inline std::vector<Detection> random_detections(Rng& rng, const std::vector<GroundTruth>& truths,
                                                std::size_t num_classes, std::size_t max_boxes) {
  std::vector<Detection> out;
  const auto n = static_cast<std::size_t>(rng.below(max_boxes + 1));
  for (std::size_t k = 0; k < n; ++k) {
    Detection d;
    if (!truths.empty() && rng.bernoulli(0.7)) {
      const auto& t = truths[rng.below(truths.size())];
      d.box = {t.box.x + rng.uniform(-1.5, 1.5), t.box.y + rng.uniform(-1.5, 1.5), t.box.w * rng.uniform(0.6, 1.4),
               t.box.h * rng.uniform(0.6, 1.4)};
      d.box.x = std::max(0.0, d.box.x);
      d.box.y = std::max(0.0, d.box.y);
      d.class_id = rng.bernoulli(0.8) ? t.class_id : static_cast<ClassId>(rng.below(num_classes));
    } else {
      d.box = {rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(1, 4), rng.uniform(1, 4)};
      d.class_id = static_cast<ClassId>(rng.below(num_classes));
    }
    d.score = random_score(rng);
    out.push_back(d);
  }
  return out;
}

// An image with up to max_boxes truths and detections per detector, on a
// small canvas so that boxes overlap often.
inline ImageRecord random_image(Rng& rng, ImageId id, std::size_t num_classes, std::size_t max_boxes) {
  ImageRecord r;
  r.image_id = id;
  r.width = 12;
  r.height = 12;
  const auto n = static_cast<std::size_t>(rng.below(max_boxes + 1));
  for (std::size_t k = 0; k < n; ++k) {
    r.truths.push_back({{rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(1, 4), rng.uniform(1, 4)},
                        static_cast<ClassId>(rng.below(num_classes))});
  }
  r.weak = random_detections(rng, r.truths, num_classes, max_boxes);
  r.strong = random_detections(rng, r.truths, num_classes, max_boxes);
  return r;
}

inline std::vector<ImageRecord> random_images(Rng& rng, std::size_t count, std::size_t num_classes,
                                              std::size_t max_boxes, ImageId first_id = 1) {
  std::vector<ImageRecord> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(random_image(rng, first_id + static_cast<ImageId>(i), num_classes, max_boxes));
  }
  return out;
}

}  // namespace oric::test
