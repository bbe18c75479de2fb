// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oric/geometry.hpp"

namespace oric {

using ClassId = int;
using ImageId = std::int64_t;

struct Detection {
  BoundingBox box;
  ClassId class_id = 0;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruth {
  BoundingBox box;
  ClassId class_id = 0;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

enum class DetectorKind { kWeak, kStrong };

struct ImageRecord {
  ImageId image_id = 0;
  double width = 0.0;
  double height = 0.0;
  std::vector<GroundTruth> truths;
  std::vector<Detection> weak;
  std::vector<Detection> strong;

  const std::vector<Detection>& detections(DetectorKind which) const noexcept {
    return which == DetectorKind::kWeak ? weak : strong;
  }

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

// Category ids are dense indices into `classes`; the original COCO ids are kept
// in `category_ids` for reporting.
struct Dataset {
  std::vector<std::string> classes;
  std::vector<std::int64_t> category_ids;
  std::vector<ImageRecord> images;

  std::size_t num_classes() const noexcept { return classes.size(); }
  std::size_t size() const noexcept { return images.size(); }

  // Index of an image id, or -1.
  std::ptrdiff_t index_of(ImageId id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Checks cross-record invariants (class ids in range, unique image ids, N >= 1).
void validate(const Dataset& dataset);

// Loads a COCO annotation file plus two COCO results files. `strong_path` may
// be empty, in which case every image gets an empty strong detection list.
Dataset load_dataset(const std::string& gt_path, const std::string& weak_path,
                     const std::string& strong_path);

// In-memory variants of the loaders. `source` names the text in error messages.
Dataset parse_dataset(const std::string& gt_json, const std::string& weak_json,
                      const std::string& strong_json, const std::string& gt_source = "gt",
                      const std::string& weak_source = "weak",
                      const std::string& strong_source = "strong");

// Writes the dataset back as a COCO annotation file plus two results files.
void save_dataset(const Dataset& dataset, const std::string& gt_path,
                  const std::string& weak_path, const std::string& strong_path);

std::string annotations_to_json(const Dataset& dataset);
std::string detections_to_json(const Dataset& dataset, DetectorKind which);


}  // namespace oric
