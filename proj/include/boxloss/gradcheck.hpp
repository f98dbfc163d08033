#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "boxloss/geom.hpp"
#include "boxloss/losses.hpp"

namespace boxloss {

inline constexpr double kDefaultFdStep = 1e-6;
inline constexpr double kKinkRadius = 1e-5;

/// Central-difference gradient of the loss w.r.t. the predicted box.
/// Returns nullopt when some perturbed box pred +- h e_i is invalid.
///
/// For CIoU the alpha weight is frozen at the unperturbed pair, matching
/// the function whose gradient ciou_loss reports.
std::optional<Grad4> finite_diff_grad(LossKind kind, const BBox& gt, const BBox& pred,
                                      double h = kDefaultFdStep);

/// Arguments of every max(., 0) / min / max / abs branch the loss passes
/// through at this pair. Gradients are not comparable near zeros of these.
std::vector<double> branch_variables(LossKind kind, const BBox& gt, const BBox& pred);

bool near_kink(LossKind kind, const BBox& gt, const BBox& pred,
               double radius = kKinkRadius);

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

enum class PairSampling {
  Uniform,   // independent random boxes
  Disjoint,  // non-overlapping pairs only
};

struct GradCheckFailure {
  BBox gt;
  BBox pred;
  int component = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckOptions {
  std::size_t samples = 1000;
  std::uint64_t seed = 42;
  double tol = 1e-4;
  double h = kDefaultFdStep;
  PairSampling sampling = PairSampling::Uniform;
};

struct GradCheckReport {
  LossKind kind = LossKind::Iou;
  std::size_t samples = 0;
  double max_rel_err = 0.0;
  double tol = 0.0;
  std::vector<GradCheckFailure> failures;
  std::size_t skipped_kink_count = 0;

  bool passed() const { return failures.empty(); }
};

/// Draws `samples` compared pairs from a stream seeded by `seed`. Pairs
/// near a kink are counted in skipped_kink_count and replaced; pairs whose
/// finite-difference stencil leaves the unit square are silently redrawn.
GradCheckReport run_gradcheck(LossKind kind, const GradCheckOptions& opts);

}  // namespace boxloss
