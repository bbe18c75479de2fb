// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace oric {

// Axis-aligned box in continuous pixel coordinates, COCO [x, y, w, h] layout.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double area() const noexcept { return w * h; }
  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// True when the box has finite coordinates and strictly positive extent.
bool is_valid(const BoundingBox& box) noexcept;

// Throws ValidationError when !is_valid(box). `what` names the offending item.
BoundingBox checked_box(double x, double y, double w, double h, const char* what);

// Intersection over union; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

}  // namespace oric
