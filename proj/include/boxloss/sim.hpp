#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "boxloss/geom.hpp"
#include "boxloss/losses.hpp"
#include "boxloss/noise.hpp"
#include "boxloss/sampling.hpp"

namespace boxloss {

// Calibrated so that the smoothing loss brings >= 95% of the standard
// anchor grid to IoU >= 0.9 within the default budget.
inline constexpr std::size_t kDefaultSteps = 2000;
inline constexpr double kDefaultStepSize = 0.005;
inline constexpr std::size_t kDefaultBatch = 16;
inline constexpr double kConvergedIou = 0.9;

enum class Parameterization { Corners, CenterSize };

/// Anchor centers on a uniform grid x grid lattice at (i+1)/(grid+1),
/// crossed with every size (geometric-mean side) and aspect (w/h).
struct AnchorSpec {
  int grid = 7;
  std::vector<double> sizes = {0.1, 0.2};
  std::vector<double> aspects = {0.5, 1.0, 2.0};
};

struct ScheduleStep {
  std::size_t iteration = 0;
  double multiplier = 1.0;
};

/// Multipliers 0.4 and 0.1 from 50% and 75% of the budget.
std::vector<ScheduleStep> default_schedule(std::size_t steps);

/// Multiplier in effect at `iteration` (1.0 before the first entry).
double schedule_multiplier(const std::vector<ScheduleStep>& schedule, std::size_t iteration);

struct SimConfig {
  LossKind loss = LossKind::SmoothIou;
  AnchorSpec anchors;
  std::vector<BBox> targets;
  std::size_t steps = kDefaultSteps;
  double step_size = kDefaultStepSize;
  std::vector<ScheduleStep> schedule = default_schedule(kDefaultSteps);
  Parameterization parameterization = Parameterization::Corners;
  std::uint64_t seed = 0;
  /// When set, each step averages the gradient over `batch` freshly
  /// perturbed copies of the target.
  std::optional<NoiseSpec> noise;
  std::size_t batch = kDefaultBatch;
  /// Independent repetitions; they only differ when noise is set.
  std::size_t runs = 1;
  /// Keep every n-th iteration record (the first and last are always kept).
  std::size_t record_stride = 1;
};

/// Throws std::invalid_argument on a malformed config.
void validate(const SimConfig& cfg);

std::vector<BBox> make_anchor_grid(const AnchorSpec& spec);

/// d corners / d (cx, cy, w, h); rows follow (x_lo, y_lo, x_hi, y_hi).
using Jacobian4 = std::array<std::array<double, 4>, 4>;
Jacobian4 center_size_jacobian();
/// Gradient w.r.t. (cx, cy, w, h) from the corner gradient (J^T g).
Grad4 center_size_grad(const Grad4& corner_grad);

struct IterationRecord {
  std::size_t iteration = 0;
  double loss = 0.0;        // against the clean target
  double iou = 0.0;         // against the clean target
  double multiplier = 1.0;  // schedule multiplier of the step taken here
  bool flagged = false;     // non-finite gradient, trajectory aborted
};

struct Trajectory {
  std::size_t run_id = 0;
  std::size_t anchor_id = 0;
  std::size_t target_id = 0;
  BBox start;
  BBox final_box;
  double final_iou = 0.0;
  bool aborted = false;
  std::vector<IterationRecord> records;
};

/// Projected gradient descent from `start` toward `target`. `noise_stream`
/// is only drawn from when cfg.noise is set.
Trajectory descend(LossKind loss, const BBox& target, const BBox& start,
                   const SimConfig& cfg, Rng& noise_stream);

struct SimSummary {
  double mean_final_iou = 0.0;
  double best_final_iou = 0.0;
  double spread = 0.0;  // max - min of per-run mean final IoU
  double converged_fraction = 0.0;
  std::vector<double> run_means;
};

struct SimResult {
  SimConfig config;
  std::vector<BBox> anchors;
  /// Ordered by (run, target, anchor).
  std::vector<Trajectory> trajectories;
  SimSummary summary;
};

SimSummary summarize(const std::vector<Trajectory>& trajectories, std::size_t runs);

/// Runs every (run, target, anchor) descent on up to `threads` workers
/// (0 = hardware concurrency). Output does not depend on `threads`.
SimResult run_sim(const SimConfig& cfg, unsigned threads = 1);

/// Fraction of anchors with positive IoU against some target pair, counted
/// over the same (target, anchor) pairs run_sim visits.
double initial_overlap_fraction(const std::vector<BBox>& anchors,
                                const std::vector<BBox>& targets);

}  // namespace boxloss
