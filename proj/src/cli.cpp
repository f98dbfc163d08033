#include "boxloss/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "boxloss/geom.hpp"
#include "boxloss/gradcheck.hpp"
#include "boxloss/losses.hpp"
#include "boxloss/noise.hpp"
#include "boxloss/report.hpp"
#include "boxloss/sim.hpp"

namespace boxloss {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Bad flags or inputs; maps to kExitUsage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v)) {
      throw UsageError(flag + ": '" + field + "' is not a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

LossKind parse_loss(const std::string& name) {
  if (auto k = parse_loss_kind(name)) return *k;
  throw UsageError("unknown loss '" + name + "' (expected iou, giou, diou, ciou, siou, smooth)");
}

std::vector<LossKind> parse_losses(const std::string& text) {
  if (text == "all") return {kAllLossKinds.begin(), kAllLossKinds.end()};
  std::vector<LossKind> out;
  std::stringstream ss(text);
  std::string name;
  while (std::getline(ss, name, ',')) out.push_back(parse_loss(name));
  if (out.empty()) throw UsageError("--losses: empty list");
  return out;
}

BBox parse_box(const std::string& text, const std::string& flag,
               const std::vector<double>& pixel_space) {
  const auto c = parse_doubles(text, flag);
  if (c.size() != 4) throw UsageError(flag + ": expected x_lo,y_lo,x_hi,y_hi");
  BBox b{c[0], c[1], c[2], c[3]};
  if (pixel_space.size() == 2) {
    b = {c[0] / pixel_space[0], c[1] / pixel_space[1], c[2] / pixel_space[0],
         c[3] / pixel_space[1]};
  }
  if (auto e = validation_error(b)) throw UsageError(flag + ": invalid box: " + *e);
  return b;
}

json terms_json(const AxisSmoothTerms& t) {
  return {{"u_pos", t.u_pos}, {"v_pos", t.v_pos}, {"d_pos", t.d_pos},
          {"u_neg", t.u_neg}, {"v_neg", t.v_neg}, {"d_neg", t.d_neg},
          {"d_c", t.d_c},     {"w_pos", t.w_pos}, {"w_neg", t.w_neg},
          {"ell", t.ell}};
}

json box_json(const BBox& b) { return json::array({b.x_lo, b.y_lo, b.x_hi, b.y_hi}); }

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return f;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "'");
}

std::vector<Sample> load_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  try {
    return read_jsonl(in);
  } catch (const std::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = ".";
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bounding-box regression loss laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->envname("BOXLOSS_SEED");
  app.add_option("--threads", g.threads, "Worker threads for simulations")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--out", g.out_dir, "Output directory");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate one loss on a box pair");
  std::string eval_loss;
  std::string gt_text;
  std::string pred_text;
  bool with_grad = false;
  std::vector<double> pixel_space;
  eval->add_option("--loss", eval_loss)->required();
  eval->add_option("--gt", gt_text, "x_lo,y_lo,x_hi,y_hi")->required();
  eval->add_option("--pred", pred_text, "x_lo,y_lo,x_hi,y_hi")->required();
  eval->add_flag("--grad", with_grad, "Include the gradient");
  eval->add_option("--pixel-space", pixel_space, "Image width and height of pixel inputs")
      ->expected(2)
      ->check(CLI::PositiveNumber);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Certify analytic gradients");
  std::string gc_losses = "all";
  GradCheckOptions gc;
  std::string gc_sampling = "uniform";
  gradcheck->add_option("--loss", gc_losses, "Loss name, comma list, or 'all'");
  gradcheck->add_option("--samples", gc.samples);
  gradcheck->add_option("--tol", gc.tol)->check(CLI::PositiveNumber);
  gradcheck->add_option("--fd-step", gc.h, "Finite-difference step")->check(CLI::PositiveNumber);
  gradcheck->add_option("--sampling", gc_sampling)
      ->check(CLI::IsMember({"uniform", "disjoint"}));

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Gradient-descent regression from anchors");
  std::string sim_loss = "smooth";
  int grid = 7;
  std::string sizes = "0.1,0.2";
  std::string aspects = "0.5,1,2";
  std::string targets_file;
  std::size_t steps = kDefaultSteps;
  double step_size = kDefaultStepSize;
  std::size_t runs = 1;
  double noise_mu = 0.0;
  std::size_t batch = kDefaultBatch;
  std::string param = "corners";
  std::size_t stride = 1;
  simulate->add_option("--loss", sim_loss);
  simulate->add_option("--grid", grid);
  simulate->add_option("--sizes", sizes);
  simulate->add_option("--aspects", aspects);
  simulate->add_option("--targets-file", targets_file, "Dataset JSONL; default one centered box");
  simulate->add_option("--steps", steps);
  simulate->add_option("--step-size", step_size);
  simulate->add_option("--runs", runs);
  simulate->add_option("--noise-mu", noise_mu);
  simulate->add_option("--batch", batch);
  simulate->add_option("--parameterization", param)
      ->check(CLI::IsMember({"corners", "center-size"}));
  simulate->add_option("--record-stride", stride);

  // noise-sweep
  auto* sweep = app.add_subcommand("noise-sweep", "Train/test tables per noise level");
  SweepOptions sw;
  std::string sw_losses = "all";
  std::string mu_list = "0,0.2,0.4,0.6";
  std::string sw_sizes = "0.2";
  std::string sw_aspects = "1";
  sweep->add_option("--losses", sw_losses);
  sweep->add_option("--mu-list", mu_list);
  sweep->add_option("--runs", sw.runs);
  sweep->add_option("--n", sw.dataset.n, "Dataset size");
  sweep->add_option("--grid", sw.anchors.grid);
  sweep->add_option("--sizes", sw_sizes);
  sweep->add_option("--aspects", sw_aspects);
  sweep->add_option("--steps", sw.steps);
  sweep->add_option("--step-size", sw.step_size);
  sweep->add_option("--batch", sw.batch);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Synthetic dataset tools");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Generate boxes and a 50/50 split");
  DatasetOptions ds;
  gen->add_option("--n", ds.n);
  gen->add_option("--size-min", ds.size.lo);
  gen->add_option("--size-max", ds.size.hi);
  gen->add_option("--aspect-min", ds.aspect.lo);
  gen->add_option("--aspect-max", ds.aspect.hi);
  auto* perturb = dataset->add_subcommand("perturb", "Attach noisy labels");
  std::string perturb_in;
  double perturb_mu = 0.0;
  perturb->add_option("--in", perturb_in)->required();
  perturb->add_option("--mu", perturb_mu)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    const fs::path out_dir = g.out_dir;

    if (*eval) {
      const LossKind kind = parse_loss(eval_loss);
      if (!pixel_space.empty() && pixel_space.size() != 2) {
        throw UsageError("--pixel-space expects W H");
      }
      const BBox gt = parse_box(gt_text, "--gt", pixel_space);
      const BBox pred = parse_box(pred_text, "--pred", pixel_space);
      const LossEval r = loss_eval(kind, gt, pred);
      json j;
      j["value"] = r.value;
      if (with_grad) j["grad"] = r.grad;
      if (r.terms) j["terms"] = {{"x", terms_json(r.terms->first)}, {"y", terms_json(r.terms->second)}};
      out << j.dump() << '\n';
      return kExitOk;
    }

    if (*gradcheck) {
      gc.seed = g.seed;
      gc.sampling = gc_sampling == "disjoint" ? PairSampling::Disjoint : PairSampling::Uniform;
      ensure_dir(out_dir);
      bool ok = true;
      for (LossKind kind : parse_losses(gc_losses)) {
        const GradCheckReport rep = run_gradcheck(kind, gc);
        json j;
        j["loss"] = std::string(loss_name(kind));
        j["samples"] = rep.samples;
        j["seed"] = gc.seed;
        j["tol"] = rep.tol;
        j["h"] = gc.h;
        j["max_rel_err"] = rep.max_rel_err;
        j["skipped_kink_count"] = rep.skipped_kink_count;
        json failures = json::array();
        for (const auto& f : rep.failures) {
          failures.push_back({{"gt", box_json(f.gt)},
                              {"pred", box_json(f.pred)},
                              {"component", f.component},
                              {"analytic", f.analytic},
                              {"numeric", f.numeric}});
        }
        j["failures"] = failures;
        j["passed"] = rep.passed();
        auto f = open_output(out_dir / ("gradcheck_" + std::string(loss_name(kind)) + ".json"));
        f << j.dump(2) << '\n';
        err << "gradcheck " << loss_name(kind) << ": " << (rep.passed() ? "PASS" : "FAIL")
            << " samples=" << rep.samples << " max_rel_err=" << rep.max_rel_err
            << " skipped=" << rep.skipped_kink_count << '\n';
        ok = ok && rep.passed();
      }
      return ok ? kExitOk : kExitVerificationFailed;
    }

    if (*simulate) {
      SimConfig cfg;
      cfg.loss = parse_loss(sim_loss);
      cfg.anchors = {grid, parse_doubles(sizes, "--sizes"), parse_doubles(aspects, "--aspects")};
      if (targets_file.empty()) {
        cfg.targets = {BBox{0.4, 0.4, 0.6, 0.6}};
      } else {
        for (const Sample& s : load_dataset(targets_file)) cfg.targets.push_back(s.gt);
      }
      cfg.steps = steps;
      cfg.step_size = step_size;
      cfg.schedule = default_schedule(steps);
      cfg.parameterization =
          param == "corners" ? Parameterization::Corners : Parameterization::CenterSize;
      cfg.seed = g.seed;
      if (noise_mu != 0.0) cfg.noise = NoiseSpec{noise_mu, g.seed};
      cfg.batch = batch;
      cfg.runs = runs;
      cfg.record_stride = stride;
      try {
        validate(cfg);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const SimResult result = run_sim(cfg, g.threads);
      ensure_dir(out_dir);
      {
        auto f = open_output(out_dir / "trajectories.csv");
        write_trajectories_csv(f, result);
      }
      auto f = open_output(out_dir / "summary.json");
      f << summary_json(result).dump(2) << '\n';
      return kExitOk;
    }

    if (*sweep) {
      sw.losses = parse_losses(sw_losses);
      sw.mu_list = parse_doubles(mu_list, "--mu-list");
      sw.anchors.sizes = parse_doubles(sw_sizes, "--sizes");
      sw.anchors.aspects = parse_doubles(sw_aspects, "--aspects");
      sw.seed = g.seed;
      sw.dataset.seed = g.seed;
      try {
        validate(sw);
        (void)generate_dataset(sw.dataset);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      ensure_dir(out_dir);
      for (double mu : sw.mu_list) {
        const auto rows = sweep_level(sw, mu, g.threads);
        const std::string stem = sweep_file_stem(mu);
        emit(rows, ReportFormat::Csv, out_dir / (stem + ".csv"));
        emit(rows, ReportFormat::Json, out_dir / (stem + ".json"));
      }
      return kExitOk;
    }

    if (*gen) {
      ds.seed = g.seed;
      std::vector<Sample> samples;
      try {
        samples = generate_dataset(ds);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      ensure_dir(out_dir);
      {
        auto f = open_output(out_dir / "dataset.jsonl");
        write_jsonl(f, samples);
      }
      auto f = open_output(out_dir / "split.json");
      write_split_json(f, train_test_split(samples, g.seed));
      return kExitOk;
    }

    if (*perturb) {
      if (!(perturb_mu >= 0.0 && perturb_mu <= 1.0)) throw UsageError("--mu must lie in [0,1]");
      const auto samples = load_dataset(perturb_in);
      const auto noisy = perturb_dataset(samples, NoiseSpec{perturb_mu, g.seed});
      ensure_dir(out_dir);
      auto f = open_output(out_dir / "dataset_noisy.jsonl");
      write_jsonl(f, noisy);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace boxloss
