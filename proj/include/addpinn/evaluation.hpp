#pragma once

#include "addpinn/field.hpp"
#include "addpinn/partition.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace addpinn {

enum class Zone { congested, transition, free_flow };

inline constexpr double kCongestedBelowMph = 30.0;
inline constexpr double kFreeFlowAboveMph = 55.0;

Zone zone_of(double truth_mph);
std::string to_string(Zone z);

struct EvalReport {
  double rel_l2_pct = 0.0;
  double rmse_mph = 0.0;
  double mae_mph = 0.0;
  std::array<std::optional<double>, 3> zone_mae;  // indexed by Zone, empty zones omitted
  std::array<std::size_t, 3> zone_counts{};
  double train_time_s = 0.0;
};

/// 100 * ||pred - truth|| / ||truth|| over all grid points.
double relative_l2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);
double relative_l2(const SpeedField& pred, const SpeedField& truth);

/// RMSE, MAE and per-zone MAE (zones by truth speed); rel_l2 is filled as well.
EvalReport rmse_mae(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// Piecewise prediction on the truth's grid, denormalized to mph.
SpeedField predict_field(const Partition& model, const SpeedField& like, const NormStats& stats);

EvalReport evaluate(const Partition& model, const SpeedField& truth, const NormStats& stats);

/// One finished run as seen by the aggregation step.
struct RunSummary {
  std::string method;
  std::string dataset;
  int n_sensors = 0;
  std::uint64_t seed = 0;
  double rel_l2_pct = 0.0;
  double rmse_mph = 0.0;
};

struct ConfigMean {
  std::string method;
  std::string dataset;
  int n_sensors = 0;
  std::size_t n_seeds = 0;
  double rel_l2_mean = 0.0, rel_l2_std = 0.0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  int wins = 0;    // other methods with a higher mean on this configuration
  int losses = 0;  // other methods with a lower mean
};

/// Paired comparison of `method` against `other` over configuration means.
/// diff = mean(other) - mean(method), so positive values favour `method`.
struct PairedStats {
  std::string method;
  std::string other;
  std::size_t n_configs = 0;
  int wins = 0, losses = 0, ties = 0;
  double mean_diff = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  double cohens_d = 0.0;  // +/-infinity when every difference is identical and nonzero
};

/// Paired t-test, 95% CI and Cohen's d of a difference sample.
PairedStats paired_stats(const std::vector<double>& diffs);

struct Aggregate {
  std::vector<ConfigMean> rows;  // sorted by (method, n_sensors, dataset)
  std::vector<PairedStats> comparisons;
};

/// Per-configuration seed means and pairwise statistics of `reference` (when present) against every
/// other method. Throws when the seed sets differ between (method, configuration) cells.
Aggregate aggregate(const std::vector<RunSummary>& runs, const std::string& reference = "B6_addpinn");

std::string aggregate_csv(const Aggregate& agg);
std::string comparisons_csv(const Aggregate& agg);

}  // namespace addpinn
