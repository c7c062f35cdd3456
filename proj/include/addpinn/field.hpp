#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace addpinn {

/// Dense space-time speed grid [mph]. Rows are space cells, columns time steps.
/// Cell c sits at normalized x = c/(n_cells-1), step k at normalized t = k/(n_steps-1).
class SpeedField {
public:
  SpeedField() = default;
  SpeedField(Eigen::MatrixXd values, double x_min_ft, double x_max_ft, double t_range_s);

  const Eigen::MatrixXd& values() const { return values_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double x_range() const { return x_max_ - x_min_; }
  double t_range() const { return t_range_; }
  int n_cells() const { return static_cast<int>(values_.rows()); }
  int n_steps() const { return static_cast<int>(values_.cols()); }
  double operator()(int cell, int step) const { return values_(cell, step); }

  double x_hat(int cell) const;
  double t_hat(int step) const;

private:
  Eigen::MatrixXd values_;
  double x_min_ = 0.0;
  double x_max_ = 1.0;
  double t_range_ = 1.0;
};

struct NormStats {
  double u_min = 0.0;
  double u_max = 1.0;
  double v_f = 1.0;

  double normalize(double u) const { return (u - u_min) / (u_max - u_min); }
  double denormalize(double u_hat) const { return u_min + u_hat * (u_max - u_min); }
};

struct Observation {
  int cell = 0;
  int step = 0;
  double speed = 0.0;  // mph
};

struct ObservationSet {
  std::vector<Observation> records;  // sorted by (cell, step)
  std::vector<int> sensor_cells;
  NormStats stats;
  // Grid geometry needed to map indices to normalized coordinates.
  int n_cells = 0;
  int n_steps = 0;

  bool empty() const { return records.empty(); }
};

/// Linear-interpolation percentile between order statistics, 0 < fraction <= 1.
double percentile(std::span<const double> values, double fraction);

NormStats compute_stats(const SpeedField& field, double percentile_fraction = 0.95);

/// Min-max scaling of every grid value; throws if the stats are degenerate.
Eigen::MatrixXd normalize(const SpeedField& field, const NormStats& stats);
Eigen::MatrixXd denormalize(const Eigen::MatrixXd& normalized, const NormStats& stats);

/// Equally spaced interior sensor cells, rounded half-to-even.
std::vector<int> place_sensors(int n_cells, int n_sensors);

ObservationSet extract_observations(const SpeedField& field, std::span<const int> sensors,
                                    const NormStats& stats);

// CSV: header `# x_min_ft,x_max_ft,t_range_s,n_cells,n_steps`, then one row per cell.
SpeedField read_speed_field_csv(const std::filesystem::path& path);
void write_speed_field_csv(const SpeedField& field, const std::filesystem::path& path);

std::string observations_to_json(const ObservationSet& obs);
ObservationSet observations_from_json(const std::string& text);

}  // namespace addpinn
