#include "boxloss/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "boxloss/sampling.hpp"

namespace boxloss {

namespace {

double evaluate(LossKind kind, const BBox& gt, const BBox& pred,
                std::optional<double> ciou_alpha_frozen) {
  if (kind == LossKind::CIou) return ciou_loss(gt, pred, ciou_alpha_frozen).value;
  return loss_eval(kind, gt, pred).value;
}

}  // namespace

std::optional<Grad4> finite_diff_grad(LossKind kind, const BBox& gt, const BBox& pred,
                                      double h) {
  std::optional<double> alpha;
  if (kind == LossKind::CIou) alpha = ciou_alpha(gt, pred);

  Grad4 g{};
  for (int i = 0; i < 4; ++i) {
    auto plus = pred.to_array();
    auto minus = pred.to_array();
    plus[i] += h;
    minus[i] -= h;
    const BBox bp = BBox::from_array(plus);
    const BBox bm = BBox::from_array(minus);
    if (!is_valid(bp) || !is_valid(bm)) return std::nullopt;
    g[i] = (evaluate(kind, gt, bp, alpha) - evaluate(kind, gt, bm, alpha)) / (2.0 * h);
  }
  return g;
}

std::vector<double> branch_variables(LossKind kind, const BBox& g, const BBox& p) {
  // Edge-vs-edge comparisons cover the intersection and enclosing-box
  // min/max as well as every offset clamp of the smoothing penalty.
  std::vector<double> v = {
      p.x_lo - g.x_lo, p.x_hi - g.x_hi, p.y_lo - g.y_lo, p.y_hi - g.y_hi,
      p.x_lo - g.x_hi, p.x_hi - g.x_lo, p.y_lo - g.y_hi, p.y_hi - g.y_lo,
  };
  if (kind == LossKind::SIou) {
    v.push_back(p.cx() - g.cx());
    v.push_back(p.cy() - g.cy());
    v.push_back(p.width() - g.width());
    v.push_back(p.height() - g.height());
  }
  return v;
}

bool near_kink(LossKind kind, const BBox& gt, const BBox& pred, double radius) {
  const auto vars = branch_variables(kind, gt, pred);
  return std::any_of(vars.begin(), vars.end(),
                     [radius](double z) { return std::abs(z) < radius; });
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport run_gradcheck(LossKind kind, const GradCheckOptions& opts) {
  GradCheckReport report;
  report.kind = kind;
  report.tol = opts.tol;

  Rng rng = Rng::derive(opts.seed, {static_cast<std::uint64_t>(kind)});
  while (report.samples < opts.samples) {
    BBox gt;
    BBox pred;
    if (opts.sampling == PairSampling::Disjoint) {
      std::tie(gt, pred) = random_disjoint_pair(rng);
    } else {
      gt = random_box(rng);
      pred = random_box(rng);
    }
    if (near_kink(kind, gt, pred)) {
      ++report.skipped_kink_count;
      continue;
    }
    const auto numeric = finite_diff_grad(kind, gt, pred, opts.h);
    if (!numeric) continue;

    const Grad4 analytic = loss_eval(kind, gt, pred).grad;
    ++report.samples;
    for (int i = 0; i < 4; ++i) {
      const double err = relative_error(analytic[i], (*numeric)[i]);
      report.max_rel_err = std::max(report.max_rel_err, err);
      if (err > opts.tol) {
        report.failures.push_back({gt, pred, i, analytic[i], (*numeric)[i]});
      }
    }
  }
  return report;
}

}  // namespace boxloss
