// SPDX-License-Identifier: Apache-2.0
#include "oric/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oric/error.hpp"

namespace oric {

bool is_valid(const BoundingBox& box) noexcept {
  return std::isfinite(box.x) && std::isfinite(box.y) && std::isfinite(box.w) &&
         std::isfinite(box.h) && box.w > 0.0 && box.h > 0.0;
}

BoundingBox checked_box(double x, double y, double w, double h, const char* what) {
  BoundingBox box{x, y, w, h};
  if (!is_valid(box)) {
    throw ValidationError(std::string(what) + ": bbox must be finite with positive width and height");
  }
  return box;
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  // Areas from the same edge differences as the intersection, so that
  // iou(a, a) is exactly 1.
  const double area_a = (a.right() - a.x) * (a.bottom() - a.y);
  const double area_b = (b.right() - b.x) * (b.bottom() - b.y);
  const double inter = iw * ih;
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace oric
