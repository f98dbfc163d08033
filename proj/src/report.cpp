#include "boxloss/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace boxloss {

using nlohmann::json;

std::vector<ReportRow> aggregate(const std::vector<RunOutcome>& outcomes, std::size_t runs) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  std::vector<ReportRow> rows;
  for (LossKind kind : kAllLossKinds) {
    std::vector<const RunOutcome*> mine;
    for (const RunOutcome& o : outcomes) {
      if (o.kind == kind) mine.push_back(&o);
    }
    if (mine.empty()) continue;
    if (mine.size() != runs) {
      throw std::invalid_argument("loss " + std::string(loss_name(kind)) + " has " +
                                  std::to_string(mine.size()) + " runs, expected " +
                                  std::to_string(runs));
    }
    // Sorting makes the sums independent of input order.
    std::vector<double> train;
    std::vector<double> test;
    for (const RunOutcome* o : mine) {
      train.push_back(o->train_mean);
      test.push_back(o->test_mean);
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    double train_sum = 0.0;
    double test_sum = 0.0;
    for (double v : train) train_sum += v;
    for (double v : test) test_sum += v;

    ReportRow row;
    row.kind = kind;
    row.train_avg = train_sum / static_cast<double>(runs);
    row.test_avg = test_sum / static_cast<double>(runs);
    row.test_best = test.back();
    row.spread = test.back() - test.front();
    row.overfit = row.train_avg - row.test_avg;
    rows.push_back(row);
  }
  return rows;
}

std::string format_sig6(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kCsvHeader << '\n';
  for (const ReportRow& r : rows) {
    out << loss_name(r.kind) << ',' << format_sig6(r.train_avg) << ','
        << format_sig6(r.test_avg) << ',' << format_sig6(r.test_best) << ','
        << format_sig6(r.spread) << ',' << format_sig6(r.overfit) << '\n';
  }
}

namespace {

double parse_number(const std::string& field, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw std::runtime_error("report line " + std::to_string(line_no) + ": bad number '" +
                             field + "'");
  }
  return v;
}

}  // namespace

std::vector<ReportRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("report: missing or unexpected CSV header");
  }
  std::vector<ReportRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 6) {
      throw std::runtime_error("report line " + std::to_string(line_no) + ": expected 6 fields");
    }
    const auto kind = parse_loss_kind(fields[0]);
    if (!kind) {
      throw std::runtime_error("report line " + std::to_string(line_no) + ": unknown loss '" +
                               fields[0] + "'");
    }
    ReportRow r;
    r.kind = *kind;
    r.train_avg = parse_number(fields[1], line_no);
    r.test_avg = parse_number(fields[2], line_no);
    r.test_best = parse_number(fields[3], line_no);
    r.spread = parse_number(fields[4], line_no);
    r.overfit = parse_number(fields[5], line_no);
    rows.push_back(r);
  }
  return rows;
}

namespace {

// The JSON carries the same rounded values as the CSV.
double rounded(double v) { return std::strtod(format_sig6(v).c_str(), nullptr); }

}  // namespace

void write_json(std::ostream& out, const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const ReportRow& r : rows) {
    json j;
    j["loss"] = std::string(loss_name(r.kind));
    j["train_avg"] = rounded(r.train_avg);
    j["test_avg"] = rounded(r.test_avg);
    j["test_best"] = rounded(r.test_best);
    j["spread"] = rounded(r.spread);
    j["overfit"] = rounded(r.overfit);
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

void emit(const std::vector<ReportRow>& rows, ReportFormat format,
          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  if (format == ReportFormat::Csv) {
    write_csv(out, rows);
  } else {
    write_json(out, rows);
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_trajectories_csv(std::ostream& out, const SimResult& result) {
  out << "run,target,anchor,iteration,loss,iou,multiplier,flagged\n";
  char buf[160];
  for (const Trajectory& t : result.trajectories) {
    for (const IterationRecord& r : t.records) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.10g,%.10g,%.6g,%d\n", t.run_id,
                    t.target_id, t.anchor_id, r.iteration, r.loss, r.iou, r.multiplier,
                    r.flagged ? 1 : 0);
      out << buf;
    }
  }
}

namespace {

json box_array(const BBox& b) { return json::array({b.x_lo, b.y_lo, b.x_hi, b.y_hi}); }

}  // namespace

json summary_json(const SimResult& result) {
  const SimConfig& c = result.config;
  json cfg;
  cfg["loss"] = std::string(loss_name(c.loss));
  cfg["grid"] = c.anchors.grid;
  cfg["sizes"] = c.anchors.sizes;
  cfg["aspects"] = c.anchors.aspects;
  json targets = json::array();
  for (const BBox& t : c.targets) targets.push_back(box_array(t));
  cfg["targets"] = targets;
  cfg["steps"] = c.steps;
  cfg["step_size"] = c.step_size;
  json schedule = json::array();
  for (const ScheduleStep& s : c.schedule) schedule.push_back({s.iteration, s.multiplier});
  cfg["schedule"] = schedule;
  cfg["parameterization"] =
      c.parameterization == Parameterization::Corners ? "corners" : "center-size";
  cfg["seed"] = c.seed;
  cfg["noise_mu"] = c.noise ? c.noise->mu : 0.0;
  cfg["batch"] = c.batch;
  cfg["runs"] = c.runs;

  const SimSummary& s = result.summary;
  json summary;
  summary["mean_final_iou"] = s.mean_final_iou;
  summary["best_final_iou"] = s.best_final_iou;
  summary["spread"] = s.spread;
  summary["converged_fraction"] = s.converged_fraction;
  summary["run_means"] = s.run_means;
  summary["anchors"] = result.anchors.size();
  summary["trajectories"] = result.trajectories.size();
  std::size_t aborted = 0;
  for (const Trajectory& t : result.trajectories) aborted += t.aborted ? 1 : 0;
  summary["aborted"] = aborted;

  json out;
  out["config"] = cfg;
  out["summary"] = summary;
  return out;
}

void validate(const SweepOptions& opts) {
  if (opts.losses.empty()) throw std::invalid_argument("sweep needs at least one loss");
  if (opts.mu_list.empty()) throw std::invalid_argument("sweep needs at least one noise level");
  for (std::size_t i = 0; i < opts.mu_list.size(); ++i) {
    const double mu = opts.mu_list[i];
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("noise levels must lie in [0,1]");
    if (i > 0 && !(mu > opts.mu_list[i - 1])) {
      throw std::invalid_argument("noise levels must be strictly increasing");
    }
  }
  if (opts.runs < 1) throw std::invalid_argument("runs must be >= 1");
}

std::vector<ReportRow> sweep_level(const SweepOptions& opts, double mu, unsigned threads) {
  validate(opts);
  const std::vector<Sample> data = generate_dataset(opts.dataset);
  const Split split = train_test_split(data, opts.dataset.seed);
  std::map<std::string, BBox> by_id;
  for (const Sample& s : data) by_id.emplace(s.id, s.gt);
  auto boxes = [&](const std::vector<std::string>& ids) {
    std::vector<BBox> out;
    for (const auto& id : ids) out.push_back(by_id.at(id));
    return out;
  };
  const std::vector<BBox> train_targets = boxes(split.train);
  const std::vector<BBox> test_targets = boxes(split.test);

  // Without noise every run is identical, so one run stands for all.
  const bool noisy = mu > 0.0;
  std::vector<RunOutcome> outcomes;
  for (LossKind kind : opts.losses) {
    SimConfig cfg;
    cfg.loss = kind;
    cfg.anchors = opts.anchors;
    cfg.steps = opts.steps;
    cfg.step_size = opts.step_size;
    cfg.schedule = default_schedule(opts.steps);
    cfg.batch = opts.batch;
    cfg.runs = noisy ? opts.runs : 1;
    cfg.record_stride = opts.steps;
    if (noisy) cfg.noise = NoiseSpec{mu, opts.seed};

    cfg.targets = train_targets;
    cfg.seed = mix64(opts.seed) ^ 0x747261696eULL;
    const SimResult train = run_sim(cfg, threads);
    cfg.targets = test_targets;
    cfg.seed = mix64(opts.seed) ^ 0x74657374ULL;
    const SimResult test = run_sim(cfg, threads);

    for (std::size_t r = 0; r < opts.runs; ++r) {
      const std::size_t src = noisy ? r : 0;
      outcomes.push_back({kind, train.summary.run_means[src], test.summary.run_means[src]});
    }
  }
  return aggregate(outcomes, opts.runs);
}

std::string sweep_file_stem(double mu) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "report_mu%03d", static_cast<int>(std::lround(mu * 100.0)));
  return buf;
}

}  // namespace boxloss
