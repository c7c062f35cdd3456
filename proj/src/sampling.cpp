#include "addpinn/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace addpinn {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = splitmix64(root ^ splitmix64(static_cast<std::uint64_t>(stream)));
  for (std::uint64_t i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

Eigen::Matrix2Xd latin_hypercube(int n, const Box& box, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("latin_hypercube: n must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> perm_t(static_cast<std::size_t>(n));
  std::iota(perm_t.begin(), perm_t.end(), 0);
  std::shuffle(perm_t.begin(), perm_t.end(), rng);
  Eigen::Matrix2Xd pts(2, n);
  const double inv = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const double ux = (i + unit(rng)) * inv;
    const double ut = (perm_t[static_cast<std::size_t>(i)] + unit(rng)) * inv;
    pts(0, i) = box.x_lo + ux * (box.x_hi - box.x_lo);
    pts(1, i) = box.t_lo + ut * (box.t_hi - box.t_lo);
  }
  return pts;
}

Eigen::Matrix2Xd uniform_points(int n, const Box& box, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(box.x_lo, box.x_hi);
  std::uniform_real_distribution<double> ut(box.t_lo, box.t_hi);
  Eigen::Matrix2Xd pts(2, std::max(n, 0));
  for (int i = 0; i < n; ++i) {
    pts(0, i) = ux(rng);
    pts(1, i) = ut(rng);
  }
  return pts;
}

std::vector<int> sample_without_replacement(int n, int k, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(std::max(n, 0)));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  const int take = std::min(k, n);
  for (int i = 0; i < take; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

}  // namespace addpinn
