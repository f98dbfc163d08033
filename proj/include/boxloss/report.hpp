#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "boxloss/losses.hpp"
#include "boxloss/noise.hpp"
#include "boxloss/sim.hpp"

namespace boxloss {

/// One table row: final-IoU statistics of a loss over repeated runs.
struct ReportRow {
  LossKind kind = LossKind::Iou;
  double train_avg = 0.0;
  double test_avg = 0.0;
  double test_best = 0.0;  // best run's test average
  double spread = 0.0;     // best minus worst run's test average
  double overfit = 0.0;    // train_avg - test_avg, may be negative

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Per-run means of one loss on the train and test splits.
struct RunOutcome {
  LossKind kind = LossKind::Iou;
  double train_mean = 0.0;
  double test_mean = 0.0;
};

/// One row per loss kind present, in kAllLossKinds order. Throws
/// std::invalid_argument unless every present kind has exactly `runs`
/// outcomes.
std::vector<ReportRow> aggregate(const std::vector<RunOutcome>& outcomes, std::size_t runs);

/// Six significant digits, round-half-even, '.' separator, no "-0".
std::string format_sig6(double v);

enum class ReportFormat { Csv, Json };

inline constexpr const char* kCsvHeader = "loss,train_avg,test_avg,test_best,spread,overfit";

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_csv(std::istream& in);
void write_json(std::ostream& out, const std::vector<ReportRow>& rows);

/// Writes rows to `path`; throws std::runtime_error naming the path when
/// it cannot be written.
void emit(const std::vector<ReportRow>& rows, ReportFormat format,
          const std::filesystem::path& path);

/// Per-iteration trajectory table of a simulation.
void write_trajectories_csv(std::ostream& out, const SimResult& result);
/// Config echo plus summary statistics.
nlohmann::json summary_json(const SimResult& result);

/// Desk-scale analogue of the clean/noisy training tables: every loss
/// regresses the boxes of a synthetic dataset from a fixed anchor set,
/// with per-step noisy label batches, on both halves of a fixed split.
struct SweepOptions {
  std::vector<LossKind> losses{kAllLossKinds.begin(), kAllLossKinds.end()};
  std::vector<double> mu_list = {0.0, 0.2, 0.4, 0.6};
  std::size_t runs = 3;
  DatasetOptions dataset;
  AnchorSpec anchors{3, {0.2}, {1.0}};
  std::size_t steps = 1000;
  double step_size = kDefaultStepSize;
  std::size_t batch = kDefaultBatch;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument; mu_list must be strictly increasing in [0,1].
void validate(const SweepOptions& opts);

/// Table rows for a single noise level.
std::vector<ReportRow> sweep_level(const SweepOptions& opts, double mu, unsigned threads);

/// Fixed file stem for a noise level, e.g. 0.2 -> "report_mu020".
std::string sweep_file_stem(double mu);

}  // namespace boxloss
