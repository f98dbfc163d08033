#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <utility>

#include "boxloss/geom.hpp"

namespace boxloss {

enum class LossKind { Iou, GIou, DIou, CIou, SIou, SmoothIou };

/// All kinds in declaration order; reports are ordered by this.
inline constexpr std::array<LossKind, 6> kAllLossKinds = {
    LossKind::Iou, LossKind::GIou, LossKind::DIou,
    LossKind::CIou, LossKind::SIou, LossKind::SmoothIou};

/// Short command-line name: iou, giou, diou, ciou, siou, smooth.
std::string_view loss_name(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);

/// d loss / d (x_lo, y_lo, x_hi, y_hi) of the predicted box.
using Grad4 = std::array<double, 4>;

/// Per-axis quantities of the smoothing penalty. "pos" offsets measure how
/// far the prediction extends past the ground truth's high edge, "neg"
/// offsets past its low edge.
struct AxisSmoothTerms {
  double u_pos = 0.0;  // max(p_lo - g_hi, 0)
  double v_pos = 0.0;  // max(p_hi - g_hi, 0)
  double d_pos = 0.0;  // v_pos - u_pos
  double u_neg = 0.0;  // max(g_lo - p_lo, 0)
  double v_neg = 0.0;  // max(g_lo - p_hi, 0)
  double d_neg = 0.0;  // u_neg - v_neg
  double d_c = 0.0;    // distance from gt center to the farther border
  double w_pos = 0.0;
  double w_neg = 0.0;
  double ell = 0.0;    // (1 - d_pos) w_pos + (1 - d_neg) w_neg, in [0,2]
};

struct LossEval {
  double value = 0.0;
  Grad4 grad{};
  /// (x-axis, y-axis) terms; only set by the smoothing loss.
  std::optional<std::pair<AxisSmoothTerms, AxisSmoothTerms>> terms;
};

struct SIoUParams {
  double theta = 4.0;  // shape-cost exponent, must lie in [2, 6]
};

AxisSmoothTerms axis_smooth_terms(const AxisInterval& gt, const AxisInterval& pred);

struct SmoothPenalty {
  double value = 0.0;  // 1 - ell_x * ell_y / 4
  AxisSmoothTerms x;
  AxisSmoothTerms y;
};

SmoothPenalty smooth_penalty(const BBox& gt, const BBox& pred);

/// 1 - IoU. Exactly zero gradient whenever the boxes do not overlap.
LossEval iou_loss(const BBox& gt, const BBox& pred);

/// 1 - IoU + (|C| - |union|) / |C| with C the enclosing box.
LossEval giou_loss(const BBox& gt, const BBox& pred);

/// 1 - IoU + rho^2 / c^2: squared center distance over the squared
/// diagonal of the enclosing box.
LossEval diou_loss(const BBox& gt, const BBox& pred);

/// Trade-off weight alpha = v / ((1 - IoU) + v) of the CIoU loss; 0 when
/// both terms vanish.
double ciou_alpha(const BBox& gt, const BBox& pred);

/// DIoU + alpha * v with v the arctan aspect-ratio discrepancy. The
/// gradient treats alpha as a constant. Passing `frozen_alpha` evaluates
/// the loss with that alpha instead of the one implied by the pair, which
/// is the function the gradient actually differentiates.
LossEval ciou_loss(const BBox& gt, const BBox& pred,
                   std::optional<double> frozen_alpha = std::nullopt);

/// 1 - IoU + (distance cost + shape cost) / 2, where the distance cost is
/// modulated by the angle cost of the center offset. Throws
/// std::invalid_argument when params.theta is outside [2, 6].
LossEval siou_loss(const BBox& gt, const BBox& pred, const SIoUParams& params = {});

/// (1 - IoU) + smooth_penalty. Populates `terms`.
LossEval smooth_loss(const BBox& gt, const BBox& pred);

/// Uniform dispatch; SIoU uses default parameters.
LossEval loss_eval(LossKind kind, const BBox& gt, const BBox& pred);

}  // namespace boxloss
