#include "addpinn/lwr.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace addpinn {

namespace {

void check_density(const FundamentalDiagram& fd, double rho) {
  if (!(rho >= 0.0 && rho <= fd.rho_jam))
    throw std::out_of_range("density " + std::to_string(rho) + " outside [0, rho_jam]");
}

}  // namespace

double flow(const FundamentalDiagram& fd, double rho) {
  check_density(fd, rho);
  return fd.v_f * rho * (1.0 - rho / fd.rho_jam);
}

double characteristic_speed(const FundamentalDiagram& fd, double rho) {
  check_density(fd, rho);
  return fd.v_f * (1.0 - 2.0 * rho / fd.rho_jam);
}

double rh_shock_speed(const FundamentalDiagram& fd, double rho_l, double rho_r) {
  if (std::abs(rho_l - rho_r) <= 1e-12) throw std::invalid_argument("rh_shock_speed: equal states");
  return (flow(fd, rho_l) - flow(fd, rho_r)) / (rho_l - rho_r);
}

double godunov_flux(const FundamentalDiagram& fd, double rho_l, double rho_r) {
  const double q_l = flow(fd, rho_l);
  const double q_r = flow(fd, rho_r);
  if (rho_l <= rho_r) return std::min(q_l, q_r);
  const double critical = 0.5 * fd.rho_jam;
  if (rho_r <= critical && critical <= rho_l) return flow(fd, critical);
  return std::max(q_l, q_r);
}

double NondimCoeffs::norm() const { return std::sqrt(A * A + B * B + 1.0); }

NondimCoeffs nondim_coeffs(const NormStats& stats, double x_range_ft, double t_range_s) {
  if (!(stats.u_max > stats.u_min)) throw std::invalid_argument("nondim_coeffs: u_max must exceed u_min");
  if (!(x_range_ft > 0.0 && t_range_s > 0.0)) throw std::invalid_argument("nondim_coeffs: extents must be positive");
  NondimCoeffs c;
  c.C = kFeetPerSecondPerMph * t_range_s / x_range_ft;
  c.A = (stats.v_f - 2.0 * stats.u_min) * c.C;
  c.B = 2.0 * (stats.u_max - stats.u_min) * c.C;
  return c;
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::riemann_shock: return "riemann_shock";
    case ScenarioKind::rarefaction: return "rarefaction";
    case ScenarioKind::uniform: return "uniform";
    case ScenarioKind::multi_wave: return "multi_wave";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "riemann_shock" || name == "riemann") return ScenarioKind::riemann_shock;
  if (name == "rarefaction") return ScenarioKind::rarefaction;
  if (name == "uniform") return ScenarioKind::uniform;
  if (name == "multi_wave") return ScenarioKind::multi_wave;
  throw std::invalid_argument("unknown scenario kind '" + name + "'");
}

ScenarioSpec scenario_spec_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ScenarioSpec s;
  s.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
  s.rho_left = j.value("rho_left", s.rho_left);
  s.rho_right = j.value("rho_right", s.rho_right);
  s.rho_mid = j.value("rho_mid", s.rho_mid);
  s.x0 = j.value("x0", s.x0);
  s.x1 = j.value("x1", s.x1);
  s.ramp_width = j.value("ramp_width", s.ramp_width);
  s.amplitude = j.value("amplitude", s.amplitude);
  s.n_cells = j.value("n_cells", s.n_cells);
  s.n_steps = j.value("n_steps", s.n_steps);
  s.v_f = j.value("v_f", s.v_f);
  s.rho_jam = j.value("rho_jam", s.rho_jam);
  s.cfl = j.value("cfl", s.cfl);
  s.x_range_ft = j.value("x_range_ft", s.x_range_ft);
  s.t_range_s = j.value("t_range_s", s.t_range_s);
  s.periodic = j.value("periodic", s.periodic);
  return s;
}

std::string scenario_spec_to_json(const ScenarioSpec& s) {
  nlohmann::json j = {{"kind", to_string(s.kind)}, {"rho_left", s.rho_left}, {"rho_right", s.rho_right},
                      {"rho_mid", s.rho_mid}, {"x0", s.x0}, {"x1", s.x1}, {"ramp_width", s.ramp_width},
                      {"amplitude", s.amplitude}, {"n_cells", s.n_cells}, {"n_steps", s.n_steps},
                      {"v_f", s.v_f}, {"rho_jam", s.rho_jam}, {"cfl", s.cfl},
                      {"x_range_ft", s.x_range_ft}, {"t_range_s", s.t_range_s}, {"periodic", s.periodic}};
  return j.dump(2);
}

Scenario make_scenario(const ScenarioSpec& spec) {
  if (spec.n_cells < 3 || spec.n_steps < 2) throw std::invalid_argument("scenario: grid too small");
  if (!(spec.cfl > 0.0 && spec.cfl <= 1.0)) throw std::invalid_argument("scenario: cfl must lie in (0,1]");
  if (!(spec.v_f > 0.0 && spec.rho_jam > 0.0)) throw std::invalid_argument("scenario: v_f and rho_jam must be positive");

  Scenario sc;
  sc.kind = spec.kind;
  sc.fd = {spec.v_f, spec.rho_jam};
  sc.n_cells = spec.n_cells;
  sc.n_steps = spec.n_steps;
  sc.cfl = spec.cfl;
  sc.x_range_ft = spec.x_range_ft;
  sc.t_range_s = spec.t_range_s;
  sc.boundary = spec.periodic ? BoundaryKind::periodic : BoundaryKind::fixed;

  // Smoothed step from a to b centred on x_c; sharp when ramp_width is zero.
  auto step = [&](double x, double x_c, double a, double b) {
    if (spec.ramp_width <= 0.0) return x < x_c ? a : b;
    return a + (b - a) * 0.5 * (1.0 + std::tanh((x - x_c) / spec.ramp_width));
  };

  sc.initial_density.resize(static_cast<std::size_t>(spec.n_cells));
  for (int c = 0; c < spec.n_cells; ++c) {
    const double x = static_cast<double>(c) / (spec.n_cells - 1);
    double rho = 0.0;
    switch (spec.kind) {
      case ScenarioKind::riemann_shock:
      case ScenarioKind::rarefaction:
        rho = step(x, spec.x0, spec.rho_left, spec.rho_right);
        break;
      case ScenarioKind::uniform:
        rho = spec.rho_left + spec.amplitude * std::sin(2.0 * std::numbers::pi * x);
        break;
      case ScenarioKind::multi_wave:
        rho = x < 0.5 * (spec.x0 + spec.x1) ? step(x, spec.x0, spec.rho_left, spec.rho_mid)
                                            : step(x, spec.x1, spec.rho_mid, spec.rho_right);
        break;
    }
    if (!(rho >= 0.0 && rho <= spec.rho_jam)) throw std::invalid_argument("scenario: initial density outside [0, rho_jam]");
    sc.initial_density[static_cast<std::size_t>(c)] = rho;
  }
  return sc;
}

GodunovResult godunov_solve(const Scenario& sc) {
  const int n = sc.n_cells;
  if (static_cast<int>(sc.initial_density.size()) != n) throw std::invalid_argument("godunov: initial profile length mismatch");
  if (!(sc.cfl > 0.0 && sc.cfl <= 1.0)) throw std::invalid_argument("godunov: cfl must lie in (0,1]");
  // Physical speed in ft/s against ft and s grid spacings.
  FundamentalDiagram fd_fps{sc.fd.v_f * kFeetPerSecondPerMph, sc.fd.rho_jam};
  const double dx = sc.dx_ft();
  const double dt = sc.dt_s();
  if (dt > sc.cfl * dx / fd_fps.v_f)
    throw std::invalid_argument("godunov: CFL violated, dt=" + std::to_string(dt) + " s exceeds " +
                                std::to_string(sc.cfl * dx / fd_fps.v_f) + " s");

  const double ratio = dt / dx;
  const bool periodic = sc.boundary == BoundaryKind::periodic;
  const double ghost_left = sc.initial_density.front();
  const double ghost_right = sc.initial_density.back();

  GodunovResult out;
  out.density.resize(n, sc.n_steps);
  Eigen::VectorXd rho = Eigen::Map<const Eigen::VectorXd>(sc.initial_density.data(), n);
  Eigen::VectorXd fluxes(n + 1);  // fluxes(i) is the flux through the left face of cell i
  out.density.col(0) = rho;
  for (int k = 1; k < sc.n_steps; ++k) {
    for (int i = 0; i <= n; ++i) {
      double left, right;
      if (periodic) {
        left = rho((i - 1 + n) % n);
        right = rho(i % n);
      } else {
        left = i == 0 ? ghost_left : rho(i - 1);
        right = i == n ? ghost_right : rho(i);
      }
      fluxes(i) = godunov_flux(fd_fps, left, right);
    }
    if (periodic) fluxes(n) = fluxes(0);
    for (int i = 0; i < n; ++i) rho(i) -= ratio * (fluxes(i + 1) - fluxes(i));
    // Clamp round-off excursions outside the admissible band.
    rho = rho.cwiseMax(0.0).cwiseMin(sc.fd.rho_jam);
    out.density.col(k) = rho;
  }
  Eigen::MatrixXd speed = sc.fd.v_f * (1.0 - out.density.array() / sc.fd.rho_jam);
  out.speed = SpeedField(std::move(speed), 0.0, sc.x_range_ft, sc.t_range_s);
  return out;
}

}  // namespace addpinn
