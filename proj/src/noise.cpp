#include "boxloss/noise.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace boxloss {

using nlohmann::json;

void validate(const NoiseSpec& spec) {
  if (!(spec.mu >= 0.0 && spec.mu <= 1.0)) {
    throw std::invalid_argument("noise level mu must lie in [0, 1]");
  }
}

std::array<double, 4> perturb_coords(const BBox& b, double mu, Rng& rng) {
  const double ax = mu * b.width();
  const double ay = mu * b.height();
  std::array<double, 4> c = b.to_array();
  c[0] += rng.uniform(-ax, ax);
  c[1] += rng.uniform(-ay, ay);
  c[2] += rng.uniform(-ax, ax);
  c[3] += rng.uniform(-ay, ay);
  return c;
}

BBox perturb_box(const BBox& b, const NoiseSpec& spec, Rng& rng) {
  validate(spec);
  if (spec.mu == 0.0) return b;
  const auto c = perturb_coords(b, spec.mu, rng);
  const BBox raw = BBox::from_array(c);
  if (is_valid(raw)) return raw;
  return repair_box(c[0], c[1], c[2], c[3]);
}

Rng sample_stream(std::uint64_t seed, const std::string& id) {
  return Rng::derive(seed, {hash_id(id)});
}

std::vector<Sample> generate_dataset(const DatasetOptions& opts) {
  if (opts.n == 0) throw std::invalid_argument("dataset size must be at least 1");
  const Range& s = opts.size;
  const Range& a = opts.aspect;
  if (!(s.lo > 0.0 && s.lo <= s.hi) || !(a.lo > 0.0 && a.lo <= a.hi)) {
    throw std::invalid_argument("size and aspect ranges must be positive with lo <= hi");
  }
  if (s.hi * std::sqrt(a.hi) > 1.0 || s.hi / std::sqrt(a.lo) > 1.0) {
    throw std::invalid_argument("size/aspect range does not fit inside the unit square");
  }
  if (s.lo * std::min(std::sqrt(a.lo), 1.0 / std::sqrt(a.hi)) < kMinSide) {
    throw std::invalid_argument("size/aspect range allows sides below MIN_SIDE");
  }

  std::vector<Sample> out;
  out.reserve(opts.n);
  for (std::size_t i = 0; i < opts.n; ++i) {
    Rng rng = Rng::derive(opts.seed, {i});
    const double size = rng.uniform(s.lo, s.hi);
    const double aspect = rng.uniform(a.lo, a.hi);
    const double w = size * std::sqrt(aspect);
    const double h = size / std::sqrt(aspect);
    const double x = rng.uniform(0.0, 1.0 - w);
    const double y = rng.uniform(0.0, 1.0 - h);

    char id[32];
    std::snprintf(id, sizeof id, "s%04zu", i);
    out.push_back({id, make_box(x, y, x + w, y + h), std::nullopt});
  }
  return out;
}

std::vector<Sample> perturb_dataset(const std::vector<Sample>& samples, const NoiseSpec& spec) {
  validate(spec);
  std::vector<Sample> out = samples;
  for (Sample& s : out) {
    Rng rng = sample_stream(spec.seed, s.id);
    s.noisy_gt = perturb_box(s.gt, spec, rng);
  }
  return out;
}

Split train_test_split(const std::vector<Sample>& samples, std::uint64_t seed) {
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Fisher-Yates with our own stream so the split is platform independent.
  Rng rng = Rng::derive(seed, {0x5b17ULL});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  Split split;
  const std::size_t n_train = samples.size() / 2;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? split.train : split.test).push_back(samples[order[k]].id);
  }
  return split;
}

namespace {

json box_json(const BBox& b) { return json::array({b.x_lo, b.y_lo, b.x_hi, b.y_hi}); }

BBox box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw std::runtime_error("box must be an array of 4 numbers");
  }
  return make_box(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                  j[3].get<double>());
}

}  // namespace

void write_jsonl(std::ostream& out, const std::vector<Sample>& samples) {
  for (const Sample& s : samples) {
    json j;
    j["id"] = s.id;
    j["gt"] = box_json(s.gt);
    j["noisy_gt"] = s.noisy_gt ? box_json(*s.noisy_gt) : json(nullptr);
    out << j.dump() << '\n';
  }
}

std::vector<Sample> read_jsonl(std::istream& in) {
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Sample s;
      s.id = j.at("id").get<std::string>();
      s.gt = box_from_json(j.at("gt"));
      if (j.contains("noisy_gt") && !j["noisy_gt"].is_null()) {
        s.noisy_gt = box_from_json(j["noisy_gt"]);
      }
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_split_json(std::ostream& out, const Split& split) {
  json j;
  j["train"] = split.train;
  j["test"] = split.test;
  out << j.dump() << '\n';
}

Split read_split_json(std::istream& in) {
  const json j = json::parse(in);
  return {j.at("train").get<std::vector<std::string>>(),
          j.at("test").get<std::vector<std::string>>()};
}

}  // namespace boxloss
