#include "addpinn/field.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace addpinn {

SpeedField::SpeedField(Eigen::MatrixXd values, double x_min_ft, double x_max_ft, double t_range_s)
    : values_(std::move(values)), x_min_(x_min_ft), x_max_(x_max_ft), t_range_(t_range_s) {
  if (values_.size() == 0) throw std::invalid_argument("SpeedField: empty grid");
  if (!(x_max_ > x_min_)) throw std::invalid_argument("SpeedField: x_max must exceed x_min");
  if (!(t_range_ > 0.0)) throw std::invalid_argument("SpeedField: t_range must be positive");
  if (!values_.allFinite() || values_.minCoeff() < 0.0)
    throw std::invalid_argument("SpeedField: speeds must be finite and non-negative");
}

double SpeedField::x_hat(int cell) const {
  return n_cells() > 1 ? static_cast<double>(cell) / (n_cells() - 1) : 0.0;
}

double SpeedField::t_hat(int step) const {
  return n_steps() > 1 ? static_cast<double>(step) / (n_steps() - 1) : 0.0;
}

double percentile(std::span<const double> values, double fraction) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("percentile: fraction outside (0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = fraction * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

NormStats compute_stats(const SpeedField& field, double percentile_fraction) {
  const auto& v = field.values();
  NormStats stats;
  stats.u_min = v.minCoeff();
  stats.u_max = v.maxCoeff();
  if (stats.u_max == stats.u_min)
    throw std::invalid_argument("compute_stats: degenerate field, min equals max");
  stats.v_f = percentile(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                         percentile_fraction);
  return stats;
}

Eigen::MatrixXd normalize(const SpeedField& field, const NormStats& stats) {
  if (stats.u_max == stats.u_min) throw std::invalid_argument("normalize: u_max equals u_min");
  return (field.values().array() - stats.u_min) / (stats.u_max - stats.u_min);
}

Eigen::MatrixXd denormalize(const Eigen::MatrixXd& normalized, const NormStats& stats) {
  return normalized.array() * (stats.u_max - stats.u_min) + stats.u_min;
}

std::vector<int> place_sensors(int n_cells, int n_sensors) {
  if (n_sensors < 1) throw std::invalid_argument("place_sensors: need at least one sensor");
  if (n_cells < n_sensors + 2) throw std::invalid_argument("place_sensors: grid too small");
  // Position i is i*(n_cells-1)/(n_sensors+1); round exactly in integer arithmetic.
  const long long span = n_cells - 1;
  const long long denom = n_sensors + 1;
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(n_sensors));
  for (long long i = 1; i <= n_sensors; ++i) {
    const long long num = i * span;
    long long q = num / denom;
    const long long twice_rem = 2 * (num % denom);
    if (twice_rem > denom || (twice_rem == denom && (q % 2 == 1))) ++q;
    if (!cells.empty() && q <= cells.back())
      throw std::invalid_argument("place_sensors: duplicate sensor cells, sensor count too high for grid");
    cells.push_back(static_cast<int>(q));
  }
  return cells;
}

ObservationSet extract_observations(const SpeedField& field, std::span<const int> sensors,
                                    const NormStats& stats) {
  ObservationSet obs;
  obs.stats = stats;
  obs.n_cells = field.n_cells();
  obs.n_steps = field.n_steps();
  obs.sensor_cells.assign(sensors.begin(), sensors.end());
  if (!std::is_sorted(obs.sensor_cells.begin(), obs.sensor_cells.end()) ||
      std::adjacent_find(obs.sensor_cells.begin(), obs.sensor_cells.end()) != obs.sensor_cells.end())
    throw std::invalid_argument("extract_observations: sensors must be strictly increasing");
  obs.records.reserve(sensors.size() * static_cast<std::size_t>(field.n_steps()));
  for (int c : obs.sensor_cells) {
    if (c <= 0 || c >= field.n_cells() - 1)
      throw std::invalid_argument("extract_observations: sensor cell must be interior");
    for (int k = 0; k < field.n_steps(); ++k) obs.records.push_back({c, k, field(c, k)});
  }
  return obs;
}

SpeedField read_speed_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#')
    throw std::runtime_error(path.string() + ": missing metadata header");
  std::replace(line.begin(), line.end(), ',', ' ');
  std::istringstream head(line.substr(1));
  double x_min = 0, x_max = 0, t_range = 0;
  int n_cells = 0, n_steps = 0;
  if (!(head >> x_min >> x_max >> t_range >> n_cells >> n_steps) || n_cells <= 0 || n_steps <= 0)
    throw std::runtime_error(path.string() + ": malformed metadata header");

  Eigen::MatrixXd values(n_cells, n_steps);
  for (int c = 0; c < n_cells; ++c) {
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": too few rows");
    const char* p = line.c_str();
    for (int k = 0; k < n_steps; ++k) {
      char* end = nullptr;
      values(c, k) = std::strtod(p, &end);
      if (end == p) throw std::runtime_error(path.string() + ": bad value in row " + std::to_string(c));
      p = end;
      if (*p == ',') ++p;
    }
  }
  return SpeedField(std::move(values), x_min, x_max, t_range);
}

void write_speed_field_csv(const SpeedField& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "# " << field.x_min() << ',' << field.x_max() << ',' << field.t_range() << ','
      << field.n_cells() << ',' << field.n_steps() << '\n';
  for (int c = 0; c < field.n_cells(); ++c) {
    for (int k = 0; k < field.n_steps(); ++k) {
      if (k) out << ',';
      out << field(c, k);
    }
    out << '\n';
  }
}

std::string observations_to_json(const ObservationSet& obs) {
  nlohmann::json j;
  j["sensors"] = obs.sensor_cells;
  j["stats"] = {{"u_min", obs.stats.u_min}, {"u_max", obs.stats.u_max}, {"v_f", obs.stats.v_f}};
  j["grid"] = {{"n_cells", obs.n_cells}, {"n_steps", obs.n_steps}};
  auto records = nlohmann::json::array();
  for (const auto& r : obs.records) records.push_back({r.cell, r.step, r.speed});
  j["records"] = std::move(records);
  return j.dump();
}

ObservationSet observations_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ObservationSet obs;
  obs.sensor_cells = j.at("sensors").get<std::vector<int>>();
  const auto& s = j.at("stats");
  obs.stats = {s.at("u_min").get<double>(), s.at("u_max").get<double>(), s.at("v_f").get<double>()};
  if (j.contains("grid")) {
    obs.n_cells = j["grid"].at("n_cells").get<int>();
    obs.n_steps = j["grid"].at("n_steps").get<int>();
  }
  for (const auto& r : j.at("records"))
    obs.records.push_back({r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<double>()});
  return obs;
}

}  // namespace addpinn
