#include "boxloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace boxloss {

namespace {

// Gradient component order.
constexpr int kXLo = 0;
constexpr int kYLo = 1;
constexpr int kXHi = 2;
constexpr int kYHi = 3;

// Derivative of max(z, 0); the kink at z = 0 takes the inactive branch.
double step(double z) { return z > 0.0 ? 1.0 : 0.0; }

// Share of a min/max between two edges owned by the one ahead by z;
// an exact tie splits evenly so the gradient vanishes at a perfect match.
double share(double z) { return z > 0.0 ? 1.0 : (z < 0.0 ? 0.0 : 0.5); }

double sign(double z) { return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0); }

Grad4 axpy(double a, const Grad4& x, const Grad4& y) {
  return {a * x[0] + y[0], a * x[1] + y[1], a * x[2] + y[2], a * x[3] + y[3]};
}

Grad4 scaled(double a, const Grad4& x) { return {a * x[0], a * x[1], a * x[2], a * x[3]}; }

// Intersection, union and IoU with their derivatives w.r.t. the prediction.
struct Overlap {
  double inter = 0.0;
  double uni = 0.0;
  double iou = 0.0;
  Grad4 d_inter{};
  Grad4 d_union{};
  Grad4 d_iou{};
};

Overlap overlap(const BBox& g, const BBox& p) {
  Overlap o;
  const double iw_raw = std::min(g.x_hi, p.x_hi) - std::max(g.x_lo, p.x_lo);
  const double ih_raw = std::min(g.y_hi, p.y_hi) - std::max(g.y_lo, p.y_lo);
  const double iw = std::max(iw_raw, 0.0);
  const double ih = std::max(ih_raw, 0.0);

  // d iw / d p: the prediction's edge is active only when it is the inner one.
  const double on_x = step(iw_raw);
  const double on_y = step(ih_raw);
  const double diw_dxlo = on_x * -share(p.x_lo - g.x_lo);
  const double diw_dxhi = on_x * share(g.x_hi - p.x_hi);
  const double dih_dylo = on_y * -share(p.y_lo - g.y_lo);
  const double dih_dyhi = on_y * share(g.y_hi - p.y_hi);

  o.inter = iw * ih;
  o.d_inter = {ih * diw_dxlo, iw * dih_dylo, ih * diw_dxhi, iw * dih_dyhi};

  const double pw = p.width();
  const double ph = p.height();
  const Grad4 d_area = {-ph, -pw, ph, pw};

  o.uni = g.area() + p.area() - o.inter;
  for (int i = 0; i < 4; ++i) o.d_union[i] = d_area[i] - o.d_inter[i];

  o.iou = o.inter / o.uni;
  const double inv_u2 = 1.0 / (o.uni * o.uni);
  for (int i = 0; i < 4; ++i) {
    o.d_iou[i] = (o.d_inter[i] * o.uni - o.inter * o.d_union[i]) * inv_u2;
  }
  return o;
}

// Enclosing box side lengths and their derivatives.
struct Enclosure {
  double cw = 0.0;
  double ch = 0.0;
  Grad4 d_cw{};
  Grad4 d_ch{};
};

Enclosure enclosure(const BBox& g, const BBox& p) {
  Enclosure e;
  const BBox c = enclosing_box(g, p);
  e.cw = c.width();
  e.ch = c.height();
  e.d_cw = {-share(g.x_lo - p.x_lo), 0.0, share(p.x_hi - g.x_hi), 0.0};
  e.d_ch = {0.0, -share(g.y_lo - p.y_lo), 0.0, share(p.y_hi - g.y_hi)};
  return e;
}

LossEval from_overlap(const Overlap& o) {
  LossEval out;
  out.value = 1.0 - o.iou;
  out.grad = scaled(-1.0, o.d_iou);
  return out;
}

// d ell / d (p_lo, p_hi) for one axis.
struct AxisEllGrad {
  double d_lo = 0.0;
  double d_hi = 0.0;
};

AxisEllGrad axis_ell_grad(const AxisInterval& g, const AxisInterval& p,
                          const AxisSmoothTerms& t) {
  const double du_pos_dlo = step(p.lo - g.hi);
  const double dv_pos_dhi = step(p.hi - g.hi);
  const double du_neg_dlo = -step(g.lo - p.lo);
  const double dv_neg_dhi = -step(g.lo - p.hi);

  const double dd_pos_dlo = -du_pos_dlo;
  const double dd_pos_dhi = dv_pos_dhi;
  const double dd_neg_dlo = du_neg_dlo;
  const double dd_neg_dhi = -dv_neg_dhi;

  const double inv = 1.0 / (2.0 * t.d_c);
  const double dw_pos_dlo = -du_pos_dlo * inv;
  const double dw_pos_dhi = -dv_pos_dhi * inv;
  const double dw_neg_dlo = -du_neg_dlo * inv;
  const double dw_neg_dhi = -dv_neg_dhi * inv;

  AxisEllGrad out;
  out.d_lo = -dd_pos_dlo * t.w_pos + (1.0 - t.d_pos) * dw_pos_dlo -
             dd_neg_dlo * t.w_neg + (1.0 - t.d_neg) * dw_neg_dlo;
  out.d_hi = -dd_pos_dhi * t.w_pos + (1.0 - t.d_pos) * dw_pos_dhi -
             dd_neg_dhi * t.w_neg + (1.0 - t.d_neg) * dw_neg_dhi;
  return out;
}

}  // namespace

std::string_view loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::Iou: return "iou";
    case LossKind::GIou: return "giou";
    case LossKind::DIou: return "diou";
    case LossKind::CIou: return "ciou";
    case LossKind::SIou: return "siou";
    case LossKind::SmoothIou: return "smooth";
  }
  return "unknown";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (LossKind k : kAllLossKinds) {
    if (loss_name(k) == name) return k;
  }
  return std::nullopt;
}

AxisSmoothTerms axis_smooth_terms(const AxisInterval& g, const AxisInterval& p) {
  AxisSmoothTerms t;
  t.u_pos = std::max(p.lo - g.hi, 0.0);
  t.v_pos = std::max(p.hi - g.hi, 0.0);
  t.d_pos = t.v_pos - t.u_pos;
  t.u_neg = std::max(g.lo - p.lo, 0.0);
  t.v_neg = std::max(g.lo - p.hi, 0.0);
  t.d_neg = t.u_neg - t.v_neg;

  const double c = g.center();
  t.d_c = std::max(c, 1.0 - c);
  t.w_pos = 1.0 - (t.u_pos + t.v_pos) / (2.0 * t.d_c);
  t.w_neg = 1.0 - (t.u_neg + t.v_neg) / (2.0 * t.d_c);
  t.ell = (1.0 - t.d_pos) * t.w_pos + (1.0 - t.d_neg) * t.w_neg;
  return t;
}

SmoothPenalty smooth_penalty(const BBox& gt, const BBox& pred) {
  SmoothPenalty s;
  s.x = axis_smooth_terms(gt.x_axis(), pred.x_axis());
  s.y = axis_smooth_terms(gt.y_axis(), pred.y_axis());
  s.value = 1.0 - 0.25 * s.x.ell * s.y.ell;
  return s;
}

LossEval iou_loss(const BBox& gt, const BBox& pred) {
  return from_overlap(overlap(gt, pred));
}

LossEval giou_loss(const BBox& gt, const BBox& pred) {
  const Overlap o = overlap(gt, pred);
  const Enclosure e = enclosure(gt, pred);
  LossEval out = from_overlap(o);

  const double area_c = e.cw * e.ch;
  out.value += (area_c - o.uni) / area_c;

  // penalty = 1 - U / C
  const double inv_c2 = 1.0 / (area_c * area_c);
  for (int i = 0; i < 4; ++i) {
    const double d_c = e.d_cw[i] * e.ch + e.cw * e.d_ch[i];
    out.grad[i] -= (o.d_union[i] * area_c - o.uni * d_c) * inv_c2;
  }
  return out;
}

LossEval diou_loss(const BBox& gt, const BBox& pred) {
  const Overlap o = overlap(gt, pred);
  const Enclosure e = enclosure(gt, pred);
  LossEval out = from_overlap(o);

  const double dx = pred.cx() - gt.cx();
  const double dy = pred.cy() - gt.cy();
  const double rho2 = dx * dx + dy * dy;
  const double c2 = e.cw * e.cw + e.ch * e.ch;
  out.value += rho2 / c2;

  const Grad4 d_rho2 = {dx, dy, dx, dy};
  const double inv_c4 = 1.0 / (c2 * c2);
  for (int i = 0; i < 4; ++i) {
    const double d_c2 = 2.0 * (e.cw * e.d_cw[i] + e.ch * e.d_ch[i]);
    out.grad[i] += (d_rho2[i] * c2 - rho2 * d_c2) * inv_c4;
  }
  return out;
}

namespace {

constexpr double kAspectScale = 4.0 / (std::numbers::pi * std::numbers::pi);

double aspect_discrepancy(const BBox& gt, const BBox& pred) {
  const double diff = std::atan(gt.width() / gt.height()) -
                      std::atan(pred.width() / pred.height());
  return kAspectScale * diff * diff;
}

}  // namespace

double ciou_alpha(const BBox& gt, const BBox& pred) {
  const double v = aspect_discrepancy(gt, pred);
  const double denom = (1.0 - iou(gt, pred)) + v;
  return denom > 0.0 ? v / denom : 0.0;
}

LossEval ciou_loss(const BBox& gt, const BBox& pred, std::optional<double> frozen_alpha) {
  LossEval out = diou_loss(gt, pred);

  const double wp = pred.width();
  const double hp = pred.height();
  const double diff = std::atan(gt.width() / gt.height()) - std::atan(wp / hp);
  const double v = kAspectScale * diff * diff;
  const double alpha = frozen_alpha ? *frozen_alpha : ciou_alpha(gt, pred);
  out.value += alpha * v;

  // d atan(w/h) / dw = h / (w^2 + h^2), / dh = -w / (w^2 + h^2)
  const double r2 = wp * wp + hp * hp;
  const double dv_dw = -2.0 * kAspectScale * diff * (hp / r2);
  const double dv_dh = 2.0 * kAspectScale * diff * (wp / r2);
  out.grad[kXLo] -= alpha * dv_dw;
  out.grad[kXHi] += alpha * dv_dw;
  out.grad[kYLo] -= alpha * dv_dh;
  out.grad[kYHi] += alpha * dv_dh;
  return out;
}

namespace {

// Shape cost for one dimension and its derivative w.r.t. the predicted side.
struct ShapeCost {
  double value = 0.0;
  double d_side = 0.0;
};

ShapeCost shape_cost(double pred_side, double gt_side, double theta) {
  const double big = std::max(pred_side, gt_side);
  const double omega = std::abs(pred_side - gt_side) / big;
  double d_omega = 0.0;
  if (pred_side > gt_side) {
    d_omega = gt_side / (pred_side * pred_side);
  } else if (pred_side < gt_side) {
    d_omega = -1.0 / gt_side;
  }
  const double e = std::exp(-omega);
  const double base = 1.0 - e;
  ShapeCost s;
  s.value = std::pow(base, theta);
  s.d_side = theta * std::pow(base, theta - 1.0) * e * d_omega;
  return s;
}

}  // namespace

LossEval siou_loss(const BBox& gt, const BBox& pred, const SIoUParams& params) {
  if (!(params.theta >= 2.0 && params.theta <= 6.0)) {
    throw std::invalid_argument("SIoU theta must lie in [2, 6]");
  }
  const Overlap o = overlap(gt, pred);
  const Enclosure e = enclosure(gt, pred);
  LossEval out = from_overlap(o);

  const double dx = pred.cx() - gt.cx();
  const double dy = pred.cy() - gt.cy();
  const double sigma = std::hypot(dx, dy);

  // Angle cost 1 - 2 sin^2(arcsin(|dy|/sigma) - pi/4) equals
  // sin(2 arcsin(|dy|/sigma)) = 2 |dx| |dy| / sigma^2.
  double angle = 0.0;
  double d_angle_ddx = 0.0;
  double d_angle_ddy = 0.0;
  if (sigma >= 1e-9) {
    const double s2 = sigma * sigma;
    const double ax = std::abs(dx);
    const double ay = std::abs(dy);
    angle = 2.0 * ax * ay / s2;
    const double inv_s4 = 1.0 / (s2 * s2);
    d_angle_ddx = sign(dx) * 2.0 * ay * (dy * dy - dx * dx) * inv_s4;
    d_angle_ddy = sign(dy) * 2.0 * ax * (dx * dx - dy * dy) * inv_s4;
  }
  const double gamma = 2.0 - angle;
  // Center offsets move with half of each edge.
  const Grad4 d_gamma = {-0.5 * d_angle_ddx, -0.5 * d_angle_ddy,
                         -0.5 * d_angle_ddx, -0.5 * d_angle_ddy};
  const Grad4 d_dx = {0.5, 0.0, 0.5, 0.0};
  const Grad4 d_dy = {0.0, 0.5, 0.0, 0.5};

  const double rho_x = (dx / e.cw) * (dx / e.cw);
  const double rho_y = (dy / e.ch) * (dy / e.ch);
  const double ex = std::exp(-gamma * rho_x);
  const double ey = std::exp(-gamma * rho_y);
  const double distance = (1.0 - ex) + (1.0 - ey);

  Grad4 d_distance{};
  const double cw2 = e.cw * e.cw;
  const double ch2 = e.ch * e.ch;
  for (int i = 0; i < 4; ++i) {
    const double d_rho_x = 2.0 * dx * d_dx[i] / cw2 - 2.0 * dx * dx * e.d_cw[i] / (cw2 * e.cw);
    const double d_rho_y = 2.0 * dy * d_dy[i] / ch2 - 2.0 * dy * dy * e.d_ch[i] / (ch2 * e.ch);
    d_distance[i] = ex * (rho_x * d_gamma[i] + gamma * d_rho_x) +
                    ey * (rho_y * d_gamma[i] + gamma * d_rho_y);
  }

  const ShapeCost sw = shape_cost(pred.width(), gt.width(), params.theta);
  const ShapeCost sh = shape_cost(pred.height(), gt.height(), params.theta);
  const double shape = sw.value + sh.value;
  const Grad4 d_shape = {-sw.d_side, -sh.d_side, sw.d_side, sh.d_side};

  out.value += 0.5 * (distance + shape);
  out.grad = axpy(0.5, d_distance, out.grad);
  out.grad = axpy(0.5, d_shape, out.grad);
  return out;
}

LossEval smooth_loss(const BBox& gt, const BBox& pred) {
  LossEval out = iou_loss(gt, pred);
  const SmoothPenalty s = smooth_penalty(gt, pred);
  out.value += s.value;

  const AxisEllGrad gx = axis_ell_grad(gt.x_axis(), pred.x_axis(), s.x);
  const AxisEllGrad gy = axis_ell_grad(gt.y_axis(), pred.y_axis(), s.y);
  // penalty = 1 - ell_x ell_y / 4
  out.grad[kXLo] -= 0.25 * s.y.ell * gx.d_lo;
  out.grad[kXHi] -= 0.25 * s.y.ell * gx.d_hi;
  out.grad[kYLo] -= 0.25 * s.x.ell * gy.d_lo;
  out.grad[kYHi] -= 0.25 * s.x.ell * gy.d_hi;
  out.terms = std::make_pair(s.x, s.y);
  return out;
}

LossEval loss_eval(LossKind kind, const BBox& gt, const BBox& pred) {
  switch (kind) {
    case LossKind::Iou: return iou_loss(gt, pred);
    case LossKind::GIou: return giou_loss(gt, pred);
    case LossKind::DIou: return diou_loss(gt, pred);
    case LossKind::CIou: return ciou_loss(gt, pred);
    case LossKind::SIou: return siou_loss(gt, pred);
    case LossKind::SmoothIou: return smooth_loss(gt, pred);
  }
  throw std::invalid_argument("unknown loss kind");
}

}  // namespace boxloss
