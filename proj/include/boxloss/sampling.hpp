#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "boxloss/geom.hpp"

namespace boxloss {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over a string, for seeding streams from sample ids.
std::uint64_t hash_id(std::string_view id);

/// Seeded random stream. Draws are bit-reproducible across platforms
/// (mt19937_64 is fully specified and the float conversion is explicit).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Stream keyed by a seed and any number of integer coordinates, e.g.
  /// (seed, run, anchor, target). Distinct keys give independent streams.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

/// Box with sides drawn uniformly from [min_side, max_side] and a position
/// drawn uniformly among placements that fit inside the unit square.
BBox random_box(Rng& rng, double min_side = 0.02, double max_side = 0.6);

/// Pair of boxes that do not overlap (intersection area exactly 0).
std::pair<BBox, BBox> random_disjoint_pair(Rng& rng, double min_side = 0.02,
                                           double max_side = 0.4);

}  // namespace boxloss
