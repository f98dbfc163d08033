#include "boxloss/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace boxloss {

std::vector<ScheduleStep> default_schedule(std::size_t steps) {
  std::vector<ScheduleStep> out;
  const std::size_t half = steps / 2;
  const std::size_t three_quarters = steps * 3 / 4;
  if (half > 0) out.push_back({half, 0.4});
  if (three_quarters > half) out.push_back({three_quarters, 0.1});
  return out;
}

double schedule_multiplier(const std::vector<ScheduleStep>& schedule, std::size_t iteration) {
  double m = 1.0;
  for (const ScheduleStep& s : schedule) {
    if (s.iteration > iteration) break;
    m = s.multiplier;
  }
  return m;
}

void validate(const SimConfig& cfg) {
  if (cfg.targets.empty()) throw std::invalid_argument("simulation needs at least one target");
  for (const BBox& t : cfg.targets) validate(t);
  if (cfg.steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(cfg.step_size > 0.0) || !std::isfinite(cfg.step_size)) {
    throw std::invalid_argument("step_size must be positive");
  }
  for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
    if (i > 0 && cfg.schedule[i].iteration <= cfg.schedule[i - 1].iteration) {
      throw std::invalid_argument("schedule iterations must be strictly increasing");
    }
    if (!(cfg.schedule[i].multiplier > 0.0)) {
      throw std::invalid_argument("schedule multipliers must be positive");
    }
  }
  if (cfg.anchors.grid < 1) throw std::invalid_argument("anchor grid density must be >= 1");
  if (cfg.anchors.sizes.empty() || cfg.anchors.aspects.empty()) {
    throw std::invalid_argument("anchor sizes and aspects must be non-empty");
  }
  for (double v : cfg.anchors.sizes) {
    if (!(v > 0.0)) throw std::invalid_argument("anchor sizes must be positive");
  }
  for (double v : cfg.anchors.aspects) {
    if (!(v > 0.0)) throw std::invalid_argument("anchor aspects must be positive");
  }
  if (cfg.noise) {
    validate(*cfg.noise);
    if (cfg.batch < 1) throw std::invalid_argument("noisy batch must be >= 1");
  }
  if (cfg.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (cfg.record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
}

std::vector<BBox> make_anchor_grid(const AnchorSpec& spec) {
  if (spec.grid < 1) throw std::invalid_argument("anchor grid density must be >= 1");
  std::vector<BBox> out;
  const double pitch = 1.0 / (spec.grid + 1);
  for (int row = 0; row < spec.grid; ++row) {
    for (int col = 0; col < spec.grid; ++col) {
      const double cx = (col + 1) * pitch;
      const double cy = (row + 1) * pitch;
      for (double size : spec.sizes) {
        for (double aspect : spec.aspects) {
          const double w = size * std::sqrt(aspect);
          const double h = size / std::sqrt(aspect);
          const BBox b{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
          if (is_valid(b)) out.push_back(b);
        }
      }
    }
  }
  return out;
}

Jacobian4 center_size_jacobian() {
  return {{{1.0, 0.0, -0.5, 0.0},
           {0.0, 1.0, 0.0, -0.5},
           {1.0, 0.0, 0.5, 0.0},
           {0.0, 1.0, 0.0, 0.5}}};
}

Grad4 center_size_grad(const Grad4& g) {
  const Jacobian4 j = center_size_jacobian();
  Grad4 out{};
  for (int p = 0; p < 4; ++p) {
    for (int c = 0; c < 4; ++c) out[p] += j[c][p] * g[c];
  }
  return out;
}

namespace {

bool all_finite(const Grad4& g) {
  return std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); });
}

BBox take_step(const BBox& box, const Grad4& grad, double scale, Parameterization param) {
  if (param == Parameterization::Corners) {
    return repair_box(box.x_lo - scale * grad[0], box.y_lo - scale * grad[1],
                      box.x_hi - scale * grad[2], box.y_hi - scale * grad[3]);
  }
  const Grad4 pg = center_size_grad(grad);
  const double cx = box.cx() - scale * pg[0];
  const double cy = box.cy() - scale * pg[1];
  const double w = box.width() - scale * pg[2];
  const double h = box.height() - scale * pg[3];
  return repair_box(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
}

}  // namespace

Trajectory descend(LossKind loss, const BBox& target, const BBox& start, const SimConfig& cfg,
                   Rng& noise_stream) {
  Trajectory traj;
  traj.start = start;
  BBox box = start;
  const bool noisy = cfg.noise && cfg.noise->mu > 0.0;

  for (std::size_t t = 0;; ++t) {
    const LossEval clean = loss_eval(loss, target, box);
    const double mult = schedule_multiplier(cfg.schedule, t);
    const bool last = t == cfg.steps;
    if (last || t % cfg.record_stride == 0) {
      traj.records.push_back({t, clean.value, iou(target, box), mult, false});
    }
    if (last) break;

    Grad4 grad = clean.grad;
    if (noisy) {
      grad = {};
      for (std::size_t k = 0; k < cfg.batch; ++k) {
        const BBox label = perturb_box(target, *cfg.noise, noise_stream);
        const Grad4 g = loss_eval(loss, label, box).grad;
        for (int i = 0; i < 4; ++i) grad[i] += g[i];
      }
      for (double& v : grad) v /= static_cast<double>(cfg.batch);
    }
    if (!all_finite(grad)) {
      traj.aborted = true;
      if (traj.records.empty() || traj.records.back().iteration != t) {
        traj.records.push_back({t, clean.value, iou(target, box), mult, true});
      } else {
        traj.records.back().flagged = true;
      }
      break;
    }
    box = take_step(box, grad, cfg.step_size * mult, cfg.parameterization);
  }

  traj.final_box = box;
  traj.final_iou = iou(target, box);
  return traj;
}

SimSummary summarize(const std::vector<Trajectory>& trajectories, std::size_t runs) {
  SimSummary s;
  s.run_means.assign(runs, 0.0);
  std::vector<std::size_t> run_counts(runs, 0);
  if (trajectories.empty()) return s;

  double total = 0.0;
  std::size_t converged = 0;
  s.best_final_iou = trajectories.front().final_iou;
  for (const Trajectory& t : trajectories) {
    total += t.final_iou;
    s.best_final_iou = std::max(s.best_final_iou, t.final_iou);
    if (t.final_iou >= kConvergedIou) ++converged;
    if (t.run_id < runs) {
      s.run_means[t.run_id] += t.final_iou;
      ++run_counts[t.run_id];
    }
  }
  const double n = static_cast<double>(trajectories.size());
  s.mean_final_iou = total / n;
  s.converged_fraction = static_cast<double>(converged) / n;
  for (std::size_t r = 0; r < runs; ++r) {
    if (run_counts[r] > 0) s.run_means[r] /= static_cast<double>(run_counts[r]);
  }
  const auto [lo, hi] = std::minmax_element(s.run_means.begin(), s.run_means.end());
  s.spread = *hi - *lo;
  return s;
}

SimResult run_sim(const SimConfig& cfg, unsigned threads) {
  validate(cfg);
  SimResult result;
  result.config = cfg;
  result.anchors = make_anchor_grid(cfg.anchors);
  if (result.anchors.empty()) {
    throw std::invalid_argument("anchor specification produced no valid boxes");
  }

  const std::size_t n_anchor = result.anchors.size();
  const std::size_t n_target = cfg.targets.size();
  const std::size_t n_jobs = cfg.runs * n_target * n_anchor;
  result.trajectories.resize(n_jobs);

  const std::uint64_t noise_seed = cfg.noise ? cfg.noise->seed : 0;
  auto work = [&](std::size_t job) {
    const std::size_t run = job / (n_target * n_anchor);
    const std::size_t target = (job / n_anchor) % n_target;
    const std::size_t anchor = job % n_anchor;
    Rng stream = Rng::derive(cfg.seed, {noise_seed, run, anchor, target});
    Trajectory t = descend(cfg.loss, cfg.targets[target], result.anchors[anchor], cfg, stream);
    t.run_id = run;
    t.anchor_id = anchor;
    t.target_id = target;
    result.trajectories[job] = std::move(t);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, n_jobs));
  if (n_workers <= 1) {
    for (std::size_t j = 0; j < n_jobs; ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < n_jobs; j = next++) work(j);
      });
    }
    for (auto& th : pool) th.join();
  }

  result.summary = summarize(result.trajectories, cfg.runs);
  return result;
}

double initial_overlap_fraction(const std::vector<BBox>& anchors,
                                const std::vector<BBox>& targets) {
  if (anchors.empty() || targets.empty()) return 0.0;
  std::size_t overlapping = 0;
  for (const BBox& t : targets) {
    for (const BBox& a : anchors) {
      if (intersection_area(t, a) > 0.0) ++overlapping;
    }
  }
  return static_cast<double>(overlapping) / static_cast<double>(anchors.size() * targets.size());
}

}  // namespace boxloss
