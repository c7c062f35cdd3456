#pragma once

#include "addpinn/field.hpp"
#include "addpinn/lwr.hpp"
#include "addpinn/partition.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace addpinn {

enum class Axis { x, t };

struct ResidualProfile {
  Axis axis = Axis::x;
  std::vector<double> positions;  // uniform grid on [0,1]
  std::vector<double> values;     // mean squared residual along the other axis
  std::vector<double> smoothed;
};

enum class DecompositionMode { shock_screened, decomposition_enabled };

std::string to_string(DecompositionMode m);
DecompositionMode mode_from_string(const std::string& name);

struct DecompositionConfig {
  double tau_shock = 2.0;
  double delta_min = 0.15;
  int n_x = 200;
  int n_t = 100;
  int max_subdomains = 2;  // 0 disables the cap
};

struct SplitDecision {
  bool decomposed = false;
  Direction direction = Direction::spatial;
  std::vector<double> x_splits;
  std::vector<double> t_splits;
  double indicator = 0.0;
  std::vector<int> x_peaks;
  std::vector<int> t_peaks;
  std::string reason;
};

std::string decision_to_json(const SplitDecision& d);

/// Max-to-mean ratio of sensor speed gradients (spatial between adjacent sensors over common
/// timestamps, temporal between consecutive samples per sensor). Uses normalized speeds.
double shock_indicator(const ObservationSet& obs);

/// Squared residual on the uniform n_x x n_t grid (rows x, columns t), each point evaluated by its subnet.
Eigen::MatrixXd residual_grid(const Partition& partition, const NondimCoeffs& coeffs, int n_x, int n_t);

/// Averages a squared-residual grid over the other axis and smooths it.
ResidualProfile profile_from_residuals(const Eigen::MatrixXd& residuals, Axis axis);

ResidualProfile residual_profile(const Partition& partition, const NondimCoeffs& coeffs, Axis axis, int n_x = 200,
                                 int n_t = 100);

/// max(3, floor(n/20)), bumped to the next odd integer.
int smoothing_kernel(int n);

/// Centred moving average whose window shrinks at the boundaries.
std::vector<double> smooth_profile(const std::vector<double>& values, int kernel);

/// Local maxima above 30% of the global maximum, at least 10% of n apart (higher peak wins),
/// outside the outermost 10% on each side. Returned in index order.
std::vector<int> detect_peaks(const std::vector<double>& smoothed);

/// The k deepest interior local minima (ties: leftmost) that keep delta_min from the edges and
/// from each other; equally spaced splits when too few qualify. Empty when nothing valid exists.
std::vector<double> select_splits(const std::vector<double>& smoothed, int k, double delta_min);

/// One axis' split plan: number of splits from the peaks (capped), placement from the valleys.
/// nullopt when peaks are required but absent or no valid placement exists.
std::optional<std::vector<double>> plan_axis(const ResidualProfile& profile, int max_splits, double delta_min,
                                             bool require_peaks, std::vector<int>* peaks_out = nullptr);

/// Transition-step decision for the given mode and direction.
SplitDecision decide(const ObservationSet& obs, const Partition& coarse, const NondimCoeffs& coeffs,
                     DecompositionMode mode, Direction direction, const DecompositionConfig& cfg);

/// Temporal variant: splits in t from R(t); nullopt-like fallback (decomposed=false) without peaks.
SplitDecision split_temporal(const Partition& coarse, const NondimCoeffs& coeffs, const DecompositionConfig& cfg);

/// Space-time variant: one x split and one t split, each falling back to 0.5 when its profile is flat.
SplitDecision split_spacetime(const Partition& coarse, const NondimCoeffs& coeffs, const DecompositionConfig& cfg);

struct ChildInitConfig {
  int epochs = 200;
  int points = 2000;
  double lr = 1e-3;
};

struct ChildInitReport {
  std::vector<double> initial_mse;  // per child, before matching
  std::vector<double> final_mse;
  double rms_gap = 0.0;  // piecewise vs parent over fresh points
};

/// Children for the decision's subdomains: compatible parent layers copied, then each child fitted
/// to the parent's output on random points inside its subdomain. Shock speeds start at zero.
Partition create_children(const PinnNetwork& parent, const SplitDecision& decision, const Architecture& child_arch,
                          const ChildInitConfig& cfg, std::uint64_t seed, ChildInitReport* report = nullptr);

/// RMS of piecewise(partition) - parent over n uniform points.
double warm_start_gap(const Partition& partition, const PinnNetwork& parent, int n, std::uint64_t seed);

}  // namespace addpinn
