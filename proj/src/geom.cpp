#include "boxloss/geom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace boxloss {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// Repairs one axis in place; see repair_box().
void repair_axis(double& lo, double& hi) {
  if (std::isnan(lo)) lo = 0.0;
  if (std::isnan(hi)) hi = 1.0;
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (lo > hi) std::swap(lo, hi);
  if (hi - lo >= kMinSide) return;

  const double c = 0.5 * (lo + hi);
  lo = c - 0.5 * kMinSide;
  hi = c + 0.5 * kMinSide;
  if (lo < 0.0) {
    lo = 0.0;
    hi = kMinSide;
  } else if (hi > 1.0) {
    hi = 1.0;
    lo = 1.0 - kMinSide;
  }
  // Rounding can leave the side a few ulps short.
  while (hi - lo < kMinSide) {
    if (lo > 0.0) {
      lo = std::nextafter(lo, 0.0);
    } else {
      hi = std::nextafter(hi, 1.0);
    }
  }
}

}  // namespace

std::optional<std::string> validation_error(const BBox& b) {
  const auto coords = b.to_array();
  for (double v : coords) {
    if (!std::isfinite(v)) return "coordinate is not finite";
  }
  if (!in_unit(b.x_lo) || !in_unit(b.x_hi)) return "x coordinate outside [0,1]";
  if (!in_unit(b.y_lo) || !in_unit(b.y_hi)) return "y coordinate outside [0,1]";
  if (b.x_lo > b.x_hi) return "x_lo > x_hi";
  if (b.y_lo > b.y_hi) return "y_lo > y_hi";
  if (b.x_hi - b.x_lo < kMinSide) return "width below MIN_SIDE (1e-6)";
  if (b.y_hi - b.y_lo < kMinSide) return "height below MIN_SIDE (1e-6)";
  return std::nullopt;
}

void validate(const BBox& b) {
  if (auto err = validation_error(b)) {
    throw std::invalid_argument("invalid box: " + *err);
  }
}

BBox make_box(double x_lo, double y_lo, double x_hi, double y_hi) {
  BBox b{x_lo, y_lo, x_hi, y_hi};
  validate(b);
  return b;
}

BBox repair_box(double x_lo, double y_lo, double x_hi, double y_hi) {
  repair_axis(x_lo, x_hi);
  repair_axis(y_lo, y_hi);
  return {x_lo, y_lo, x_hi, y_hi};
}

double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x_hi, b.x_hi) - std::max(a.x_lo, b.x_lo);
  const double h = std::min(a.y_hi, b.y_hi) - std::max(a.y_lo, b.y_lo);
  return std::max(w, 0.0) * std::max(h, 0.0);
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

BBox enclosing_box(const BBox& a, const BBox& b) {
  return {std::min(a.x_lo, b.x_lo), std::min(a.y_lo, b.y_lo),
          std::max(a.x_hi, b.x_hi), std::max(a.y_hi, b.y_hi)};
}

bool contains(const BBox& outer, const BBox& inner) {
  return outer.x_lo <= inner.x_lo && outer.y_lo <= inner.y_lo &&
         outer.x_hi >= inner.x_hi && outer.y_hi >= inner.y_hi;
}

}  // namespace boxloss
