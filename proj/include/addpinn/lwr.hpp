#pragma once

#include "addpinn/field.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace addpinn {

/// Miles per hour to feet per second.
inline constexpr double kFeetPerSecondPerMph = 5280.0 / 3600.0;

/// Greenshields closure q = v_f * rho * (1 - rho / rho_jam).
struct FundamentalDiagram {
  double v_f = 1.0;
  double rho_jam = 1.0;

  static FundamentalDiagram normalized() { return {1.0, 1.0}; }
};

double flow(const FundamentalDiagram& fd, double rho);
double characteristic_speed(const FundamentalDiagram& fd, double rho);
/// Rankine-Hugoniot speed (q(rho_l) - q(rho_r)) / (rho_l - rho_r); throws when the states coincide.
double rh_shock_speed(const FundamentalDiagram& fd, double rho_l, double rho_r);

/// Godunov flux for the concave Greenshields flux (exact min/max over the state interval).
double godunov_flux(const FundamentalDiagram& fd, double rho_l, double rho_r);

/// Coefficients of the normalized speed-form residual A*u_x - B*u*u_x - u_t.
struct NondimCoeffs {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;

  double norm() const;  // sqrt(A^2 + B^2 + 1)
};

NondimCoeffs nondim_coeffs(const NormStats& stats, double x_range_ft, double t_range_s);

enum class ScenarioKind { riemann_shock, rarefaction, uniform, multi_wave };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

enum class BoundaryKind { fixed, periodic };

/// Synthetic ground-truth problem. fd.v_f is in mph, densities share fd.rho_jam units.
struct Scenario {
  ScenarioKind kind = ScenarioKind::riemann_shock;
  FundamentalDiagram fd{60.0, 1.0};
  std::vector<double> initial_density;  // one value per cell
  int n_cells = 200;
  int n_steps = 800;
  double cfl = 0.9;
  double x_range_ft = 5280.0;
  double t_range_s = 90.0;
  BoundaryKind boundary = BoundaryKind::fixed;

  double dx_ft() const { return x_range_ft / (n_cells - 1); }
  double dt_s() const { return t_range_s / (n_steps - 1); }
};

/// Parameters accepted by the scenario JSON document.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::riemann_shock;
  double rho_left = 0.1;
  double rho_right = 0.7;
  double rho_mid = 0.4;         // multi_wave middle state
  double x0 = 0.35;             // normalized discontinuity position
  double x1 = 0.7;              // multi_wave second discontinuity
  double ramp_width = 0.0;      // tanh smoothing width of the initial jump (normalized)
  double amplitude = 0.0;       // uniform kind: sinusoidal perturbation amplitude
  int n_cells = 200;
  int n_steps = 800;
  double v_f = 60.0;
  double rho_jam = 1.0;
  double cfl = 0.9;
  double x_range_ft = 5280.0;
  double t_range_s = 90.0;
  bool periodic = false;
};

ScenarioSpec scenario_spec_from_json(const std::string& text);
std::string scenario_spec_to_json(const ScenarioSpec& spec);
Scenario make_scenario(const ScenarioSpec& spec);

struct GodunovResult {
  Eigen::MatrixXd density;  // n_cells x n_steps
  SpeedField speed;
};

/// Explicit first-order Godunov solve; column k is the state after k steps.
GodunovResult godunov_solve(const Scenario& scenario);

}  // namespace addpinn
