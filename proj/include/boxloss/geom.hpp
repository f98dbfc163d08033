#pragma once

#include <array>
#include <optional>
#include <string>

namespace boxloss {

/// Smallest admissible box side in normalized coordinates.
inline constexpr double kMinSide = 1e-6;

/// One axis of a box, lo <= hi.
struct AxisInterval {
  double lo = 0.0;
  double hi = 0.0;

  double center() const { return 0.5 * (lo + hi); }
  double length() const { return hi - lo; }
};

/// Axis-aligned box on the unit square. Coordinates are fractions of the
/// image width (x) and height (y); every axis is stored as (lo, hi).
///
/// BBox is a plain aggregate so that optimizers can step through invalid
/// intermediate states; use make_box() or validate() at trust boundaries.
struct BBox {
  double x_lo = 0.0;
  double y_lo = 0.0;
  double x_hi = 0.0;
  double y_hi = 0.0;

  double width() const { return x_hi - x_lo; }
  double height() const { return y_hi - y_lo; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x_lo + x_hi); }
  double cy() const { return 0.5 * (y_lo + y_hi); }
  AxisInterval x_axis() const { return {x_lo, x_hi}; }
  AxisInterval y_axis() const { return {y_lo, y_hi}; }

  std::array<double, 4> to_array() const { return {x_lo, y_lo, x_hi, y_hi}; }
  static BBox from_array(const std::array<double, 4>& c) {
    return {c[0], c[1], c[2], c[3]};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Describes the first violated invariant, or nullopt for a valid box.
std::optional<std::string> validation_error(const BBox& b);

inline bool is_valid(const BBox& b) { return !validation_error(b).has_value(); }

/// Throws std::invalid_argument naming the violated invariant.
void validate(const BBox& b);

/// Checked constructor.
BBox make_box(double x_lo, double y_lo, double x_hi, double y_hi);

/// Maps arbitrary coordinates onto a valid box: clamp to [0,1], swap
/// reversed axes, then widen any side shorter than kMinSide symmetrically
/// about its center (shifted back inside the unit square if needed).
BBox repair_box(double x_lo, double y_lo, double x_hi, double y_hi);

double intersection_area(const BBox& a, const BBox& b);
double iou(const BBox& a, const BBox& b);
BBox enclosing_box(const BBox& a, const BBox& b);

/// True when `outer` contains `inner` coordinatewise.
bool contains(const BBox& outer, const BBox& inner);

}  // namespace boxloss
