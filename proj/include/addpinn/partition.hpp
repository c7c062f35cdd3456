#pragma once

#include "addpinn/network.hpp"
#include "addpinn/sampling.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace addpinn {

enum class Direction { spatial, temporal, spacetime };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& name);

/// A spatial interface sits at fixed x and spans an interval of t; a temporal one the reverse.
enum class Orientation { spatial, temporal };
enum class InterfaceKind { smooth, shock };

struct InterfaceConfig {
  int n_samples = 200;
  double delta_shock = 0.1;
  double w_entropy = 1.0;
};

struct InterfaceState {
  Orientation orientation = Orientation::spatial;
  double position = 0.5;       // x of a spatial interface, t* of a temporal one
  double lo = 0.0, hi = 1.0;   // extent along the free coordinate
  std::size_t left = 0;        // subnet on the low side (left / before)
  std::size_t right = 1;       // subnet on the high side (right / after)
  double shock_speed = 0.0;    // trainable, spatial interfaces only
  InterfaceKind kind = InterfaceKind::smooth;  // classification of the latest step
  std::size_t shock_steps = 0;
  std::size_t smooth_steps = 0;
};

/// Tensor-product partition of [0,1]^2. Subdomain (ix, it) has index ix * n_t_cells() + it.
/// Membership is half-open [lo, hi) per axis with the last cell closed on the right.
class Partition {
public:
  Partition() = default;

  static Partition single(PinnNetwork net);
  static Partition grid(Direction direction, std::vector<double> x_splits, std::vector<double> t_splits,
                        std::vector<PinnNetwork> nets);

  Direction direction() const { return direction_; }
  const std::vector<double>& x_splits() const { return x_splits_; }
  const std::vector<double>& t_splits() const { return t_splits_; }
  std::size_t n_x_cells() const { return x_splits_.size() + 1; }
  std::size_t n_t_cells() const { return t_splits_.size() + 1; }
  std::size_t n_subdomains() const { return nets_.size(); }

  std::size_t locate(double x, double t) const;
  Box subdomain(std::size_t index) const;

  const std::vector<PinnNetwork>& nets() const { return nets_; }
  std::vector<PinnNetwork>& nets() { return nets_; }
  const std::vector<InterfaceState>& interfaces() const { return interfaces_; }
  std::vector<InterfaceState>& interfaces() { return interfaces_; }

  /// Smallest gap between consecutive x splits including the domain edges.
  double min_x_gap() const;

private:
  Direction direction_ = Direction::spatial;
  std::vector<double> x_splits_;
  std::vector<double> t_splits_;
  std::vector<PinnNetwork> nets_;
  std::vector<InterfaceState> interfaces_;
};

double piecewise_predict(const Partition& partition, double x, double t);
/// Batched; each point is evaluated by exactly one subnet.
Eigen::VectorXd piecewise_predict(const Partition& partition, const Eigen::Matrix2Xd& points);

std::string partition_to_json(const Partition& partition);
Partition partition_from_json(const std::string& text);

}  // namespace addpinn
