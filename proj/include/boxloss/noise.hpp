#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "boxloss/geom.hpp"
#include "boxloss/sampling.hpp"

namespace boxloss {

/// Label noise: every coordinate moves by n ~ U(-mu*s, mu*s), s being the
/// clean box width for x coordinates and its height for y coordinates.
struct NoiseSpec {
  double mu = 0.0;
  std::uint64_t seed = 0;
};

void validate(const NoiseSpec& spec);

/// Raw perturbed coordinates (x_lo, y_lo, x_hi, y_hi) before any repair.
std::array<double, 4> perturb_coords(const BBox& b, double mu, Rng& rng);

/// Perturbs and repairs (see repair_box). mu == 0 returns `b` unchanged and
/// consumes no randomness.
BBox perturb_box(const BBox& b, const NoiseSpec& spec, Rng& rng);

/// Stream for perturbing the sample with the given id.
Rng sample_stream(std::uint64_t seed, const std::string& id);

struct Sample {
  std::string id;
  BBox gt;
  std::optional<BBox> noisy_gt;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct DatasetOptions {
  std::size_t n = 304;
  std::uint64_t seed = 0;
  /// Geometric-mean side sqrt(w*h).
  Range size{0.1, 0.5};
  /// Aspect ratio w/h.
  Range aspect{0.5, 2.0};
};

/// n boxes with uniformly drawn size, aspect and position. Throws
/// std::invalid_argument on n == 0 or ranges that cannot fit the unit square.
std::vector<Sample> generate_dataset(const DatasetOptions& opts);

/// Applies perturb_box to every sample, keyed by (seed, id).
std::vector<Sample> perturb_dataset(const std::vector<Sample>& samples, const NoiseSpec& spec);

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Fixed 50/50 split: a seeded shuffle, first half is train.
Split train_test_split(const std::vector<Sample>& samples, std::uint64_t seed);

/// JSON-lines: {"id": str, "gt": [x_lo,y_lo,x_hi,y_hi], "noisy_gt": [...] | null}
void write_jsonl(std::ostream& out, const std::vector<Sample>& samples);
std::vector<Sample> read_jsonl(std::istream& in);

void write_split_json(std::ostream& out, const Split& split);
Split read_split_json(std::istream& in);

}  // namespace boxloss
