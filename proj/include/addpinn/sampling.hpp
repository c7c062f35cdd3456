#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace addpinn {

/// Axis-aligned box in normalized (x, t) coordinates.
struct Box {
  double x_lo = 0.0, x_hi = 1.0;
  double t_lo = 0.0, t_hi = 1.0;

  double area() const { return (x_hi - x_lo) * (t_hi - t_lo); }
};

/// Stream identifiers. Every random draw in a run comes from derive_seed(root, stream, ...).
enum class Stream : std::uint64_t {
  network_init = 1,
  collocation = 2,
  data_batch = 3,
  colloc_batch = 4,
  interface_samples = 5,
  rar = 6,
  child_init = 7,
  warm_start_points = 8,
  evaluation = 9,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a root seed with a stream id and indices into an independent child seed.
std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::initializer_list<std::uint64_t> indices = {});

using Rng = std::mt19937_64;

/// Latin hypercube sample: each axis cut into n strata, one point per stratum, strata randomly paired.
Eigen::Matrix2Xd latin_hypercube(int n, const Box& box, std::uint64_t seed);

Eigen::Matrix2Xd uniform_points(int n, const Box& box, std::uint64_t seed);

/// k distinct indices from [0, n) via partial Fisher-Yates; all of them (shuffled) when k >= n.
std::vector<int> sample_without_replacement(int n, int k, std::uint64_t seed);

}  // namespace addpinn
