// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "boxloss/cli.hpp"
#include "boxloss/gradcheck.hpp"
#include "boxloss/losses.hpp"
#include "boxloss/report.hpp"
#include "boxloss/sampling.hpp"
#include "boxloss/sim.hpp"
#include "oracles.hpp"

using namespace boxloss;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

double norm(const Grad4& g) { return std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != kExitOk) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

Outcome identity() {
  Rng rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const BBox b = random_box(rng);
    for (LossKind k : kAllLossKinds) worst = std::max(worst, std::abs(loss_eval(k, b, b).value));
  }
  return {worst <= 1e-12, "max |L(b,b)| = " + fmt("%.3g", worst)};
}

Outcome ordering() {
  Rng rng(1002);
  double pen_lo = 1.0, pen_hi = 0.0, gap = 1.0, top = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    const BBox g = random_box(rng);
    const BBox p = random_box(rng);
    const double pen = smooth_penalty(g, p).value;
    const double s = smooth_loss(g, p).value;
    pen_lo = std::min(pen_lo, pen);
    pen_hi = std::max(pen_hi, pen);
    gap = std::min(gap, s - iou_loss(g, p).value);
    top = std::max(top, s);
  }
  const bool ok = pen_lo >= -1e-9 && pen_hi <= 1 + 1e-9 && gap >= -1e-9 && top <= 2 + 1e-9;
  return {ok, "penalty in [" + fmt("%.4g", pen_lo) + ", " + fmt("%.4g", pen_hi) +
                  "], min(smooth - iou) = " + fmt("%.3g", gap) + ", max smooth = " +
                  fmt("%.4g", top)};
}

Outcome reflection() {
  Rng rng(1003);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const BBox g = random_box(rng);
    const BBox p = random_box(rng);
    const double v = smooth_loss(g, p).value;
    worst = std::max(worst, std::abs(v - smooth_loss(oracle::reflect_x(g), oracle::reflect_x(p)).value));
    worst = std::max(worst, std::abs(v - smooth_loss(oracle::reflect_y(g), oracle::reflect_y(p)).value));
  }
  return {worst <= 1e-12, "max deviation " + fmt("%.3g", worst)};
}

Outcome gradients() {
  bool ok = true;
  std::string detail;
  for (LossKind k : kAllLossKinds) {
    GradCheckOptions opts;
    opts.samples = 1000;
    opts.seed = 42;
    opts.tol = 1e-4;
    opts.h = 1e-6;
    const GradCheckReport r = run_gradcheck(k, opts);
    const bool pass = r.passed() && r.skipped_kink_count * 10 < r.samples;
    ok = ok && pass;
    detail += std::string(loss_name(k)) + " " + fmt("%.2g", r.max_rel_err) + "/" +
              std::to_string(r.skipped_kink_count) + " ";
  }
  return {ok, "max_rel_err/skipped: " + detail};
}

Outcome plateau() {
  Rng rng(1005);
  double iou_max = 0.0, smooth_min = 1e300, diou_min = 1e300, giou_min = 1e300;
  for (int i = 0; i < 10000; ++i) {
    const auto [g, p] = random_disjoint_pair(rng);
    iou_max = std::max(iou_max, norm(iou_loss(g, p).grad));
    smooth_min = std::min(smooth_min, norm(smooth_loss(g, p).grad));
    diou_min = std::min(diou_min, norm(diou_loss(g, p).grad));
    giou_min = std::min(giou_min, norm(giou_loss(g, p).grad));
  }
  const bool ok = iou_max == 0.0 && smooth_min >= 1e-6 && diou_min >= 1e-6 && giou_min >= 1e-6;
  return {ok, "max|iou grad| = " + fmt("%g", iou_max) + ", min|grad| smooth " +
                  fmt("%.3g", smooth_min) + " diou " + fmt("%.3g", diou_min) + " giou " +
                  fmt("%.3g", giou_min)};
}

Outcome raster_oracle() {
  Rng rng(1006);
  const oracle::Raster raster;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const BBox a = random_box(rng, 0.2, 0.8);
    const BBox b = random_box(rng, 0.2, 0.8);
    worst = std::max(worst, std::abs(iou(a, b) - raster.iou(a, b)));
  }
  return {worst <= 2e-3, "max |iou - raster| = " + fmt("%.3g", worst)};
}

Outcome convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig cfg;
  cfg.targets = {{0.4, 0.4, 0.6, 0.6}};
  cfg.loss = LossKind::SmoothIou;
  const SimResult smooth = run_sim(cfg);
  cfg.loss = LossKind::Iou;
  const SimResult plain = run_sim(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double overlap = initial_overlap_fraction(plain.anchors, cfg.targets);
  const bool ok = smooth.summary.converged_fraction >= 0.95 &&
                  plain.summary.converged_fraction == overlap && secs < 120.0;
  return {ok, "smooth " + fmt("%.4f", smooth.summary.converged_fraction) + " of " +
                  std::to_string(smooth.anchors.size()) + " anchors; iou " +
                  fmt("%.4f", plain.summary.converged_fraction) + " vs overlap " +
                  fmt("%.4f", overlap) + "; " + fmt("%.1f s", secs)};
}

Outcome determinism(const fs::path& root) {
  auto outputs = [&](const std::string& threads) {
    const fs::path d = root / ("det_t" + threads);
    fs::remove_all(d);
    bool ok = cli({"--seed", "3", "--threads", threads, "--out", (d / "sim").string(),
                   "simulate", "--loss", "smooth"}) == kExitOk;
    ok = ok && cli({"--seed", "3", "--threads", threads, "--out", (d / "noisy").string(),
                    "simulate", "--loss", "ciou", "--grid", "3", "--noise-mu", "0.4", "--runs",
                    "2", "--steps", "300"}) == kExitOk;
    ok = ok && cli({"--seed", "3", "--threads", threads, "--out", (d / "sweep").string(),
                    "noise-sweep", "--runs", "2", "--n", "24", "--steps", "200", "--batch",
                    "4"}) == kExitOk;
    std::vector<std::string> files;
    for (const char* f : {"sim/trajectories.csv", "sim/summary.json", "noisy/trajectories.csv",
                          "noisy/summary.json", "sweep/report_mu000.csv",
                          "sweep/report_mu020.csv", "sweep/report_mu040.csv",
                          "sweep/report_mu060.csv", "sweep/report_mu060.json"}) {
      files.push_back(fs::exists(d / f) ? slurp(d / f) : std::string());
    }
    return std::make_pair(ok, files);
  };
  const auto one = outputs("1");
  const auto eight = outputs("8");
  std::size_t same = 0;
  for (std::size_t i = 0; i < one.second.size(); ++i) {
    same += !one.second[i].empty() && one.second[i] == eight.second[i];
  }
  const bool ok = one.first && eight.first && same == one.second.size();
  return {ok, std::to_string(same) + "/" + std::to_string(one.second.size()) +
                  " files byte-identical at --threads 1 vs 8"};
}

Outcome full_sweep(const fs::path& root) {
  const fs::path d = root / "sweep_full";
  fs::remove_all(d);
  const auto t0 = std::chrono::steady_clock::now();
  const int code = cli({"--seed", "0", "--out", d.string(), "noise-sweep"});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool shaped = code == kExitOk;
  for (double mu : {0.0, 0.2, 0.4, 0.6}) {
    const fs::path csv = d / (sweep_file_stem(mu) + ".csv");
    if (!fs::exists(csv)) {
      shaped = false;
      continue;
    }
    std::istringstream in(slurp(csv));
    const auto rows = parse_csv(in);
    shaped = shaped && rows.size() == kAllLossKinds.size();
    std::printf("  mu=%.1f\n", mu);
    std::istringstream echo(slurp(csv));
    for (std::string line; std::getline(echo, line);) std::printf("    %s\n", line.c_str());
  }
  return {shaped && secs < 900.0, "4 reports in " + fmt("%.0f s", secs)};
}

Outcome table_fixture() {
  const auto rows = aggregate({{LossKind::Iou, 0.635, 0.508},
                               {LossKind::Iou, 0.635, 0.541},
                               {LossKind::Iou, 0.635, 0.559}},
                              3);
  std::ostringstream a;
  write_csv(a, rows);
  std::istringstream in(a.str());
  std::ostringstream b;
  write_csv(b, parse_csv(in));
  const std::string expected =
      std::string(kCsvHeader) + "\niou,0.635,0.536,0.559,0.051,0.099\n";
  const bool ok = a.str() == expected && b.str() == a.str();
  std::string row = a.str().substr(a.str().find('\n') + 1);
  row.pop_back();
  return {ok, row};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "boxloss_acceptance";
  fs::create_directories(root);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"identity law", identity},
      {"ordering and range laws", ordering},
      {"reflection symmetry", reflection},
      {"gradient certification", gradients},
      {"plateau separation", plateau},
      {"rasterization oracle", raster_oracle},
      {"convergence proxy", convergence},
      {"determinism across threads", [&] { return determinism(root); }},
      {"noise sweep report", [&] { return full_sweep(root); }},
      {"table-format fixture", table_fixture},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // Runtime budgets stated for the first two criteria.
    if (i == 0 && secs >= 10.0) o.ok = false;
    if (i == 1 && secs >= 60.0) o.ok = false;
    failed += !o.ok;
    std::printf("%s %2zu %-28s %s (%.1f s)\n", o.ok ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  fs::remove_all(root);
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
