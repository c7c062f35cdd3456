#include "addpinn/partition.hpp"

#include "json.hpp"

#include <algorithm>
#include <stdexcept>

namespace addpinn {

namespace {

void check_splits(const std::vector<double>& splits, const char* axis) {
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (!(splits[i] > 0.0 && splits[i] < 1.0))
      throw std::invalid_argument(std::string("partition: ") + axis + " split outside (0,1)");
    if (i > 0 && !(splits[i] > splits[i - 1]))
      throw std::invalid_argument(std::string("partition: ") + axis + " splits not strictly increasing");
  }
}

std::size_t cell_of(const std::vector<double>& splits, double v) {
  return static_cast<std::size_t>(std::upper_bound(splits.begin(), splits.end(), v) - splits.begin());
}

}  // namespace

std::string to_string(Direction d) {
  switch (d) {
    case Direction::spatial: return "spatial";
    case Direction::temporal: return "temporal";
    case Direction::spacetime: return "spacetime";
  }
  return "unknown";
}

Direction direction_from_string(const std::string& name) {
  if (name == "spatial") return Direction::spatial;
  if (name == "temporal") return Direction::temporal;
  if (name == "spacetime") return Direction::spacetime;
  throw std::invalid_argument("unknown direction '" + name + "'");
}

Partition Partition::single(PinnNetwork net) {
  std::vector<PinnNetwork> nets;
  nets.push_back(std::move(net));
  return grid(Direction::spatial, {}, {}, std::move(nets));
}

Partition Partition::grid(Direction direction, std::vector<double> x_splits, std::vector<double> t_splits,
                          std::vector<PinnNetwork> nets) {
  check_splits(x_splits, "x");
  check_splits(t_splits, "t");
  if (direction == Direction::spatial && !t_splits.empty())
    throw std::invalid_argument("partition: spatial direction cannot carry t splits");
  if (direction == Direction::temporal && !x_splits.empty())
    throw std::invalid_argument("partition: temporal direction cannot carry x splits");
  Partition p;
  p.direction_ = direction;
  p.x_splits_ = std::move(x_splits);
  p.t_splits_ = std::move(t_splits);
  if (nets.size() != p.n_x_cells() * p.n_t_cells())
    throw std::invalid_argument("partition: expected one network per subdomain");
  p.nets_ = std::move(nets);

  const std::size_t nt = p.n_t_cells();
  for (std::size_t i = 0; i < p.x_splits_.size(); ++i) {
    for (std::size_t it = 0; it < nt; ++it) {
      InterfaceState s;
      s.orientation = Orientation::spatial;
      s.position = p.x_splits_[i];
      s.lo = it == 0 ? 0.0 : p.t_splits_[it - 1];
      s.hi = it + 1 == nt ? 1.0 : p.t_splits_[it];
      s.left = i * nt + it;
      s.right = (i + 1) * nt + it;
      p.interfaces_.push_back(s);
    }
  }
  for (std::size_t j = 0; j < p.t_splits_.size(); ++j) {
    for (std::size_t ix = 0; ix < p.n_x_cells(); ++ix) {
      InterfaceState s;
      s.orientation = Orientation::temporal;
      s.position = p.t_splits_[j];
      s.lo = ix == 0 ? 0.0 : p.x_splits_[ix - 1];
      s.hi = ix + 1 == p.n_x_cells() ? 1.0 : p.x_splits_[ix];
      s.left = ix * nt + j;
      s.right = ix * nt + j + 1;
      p.interfaces_.push_back(s);
    }
  }
  return p;
}

std::size_t Partition::locate(double x, double t) const {
  return cell_of(x_splits_, x) * n_t_cells() + cell_of(t_splits_, t);
}

Box Partition::subdomain(std::size_t index) const {
  const std::size_t nt = n_t_cells();
  const std::size_t ix = index / nt;
  const std::size_t it = index % nt;
  Box b;
  b.x_lo = ix == 0 ? 0.0 : x_splits_[ix - 1];
  b.x_hi = ix + 1 == n_x_cells() ? 1.0 : x_splits_[ix];
  b.t_lo = it == 0 ? 0.0 : t_splits_[it - 1];
  b.t_hi = it + 1 == nt ? 1.0 : t_splits_[it];
  return b;
}

double Partition::min_x_gap() const {
  double prev = 0.0, gap = 1.0;
  for (double s : x_splits_) {
    gap = std::min(gap, s - prev);
    prev = s;
  }
  return std::min(gap, 1.0 - prev);
}

double piecewise_predict(const Partition& partition, double x, double t) {
  return forward(partition.nets()[partition.locate(x, t)], x, t);
}

Eigen::VectorXd piecewise_predict(const Partition& partition, const Eigen::Matrix2Xd& points) {
  const Eigen::Index n = points.cols();
  Eigen::VectorXd out(n);
  if (partition.n_subdomains() == 1) return forward(partition.nets()[0], points);
  std::vector<std::vector<Eigen::Index>> members(partition.n_subdomains());
  for (Eigen::Index i = 0; i < n; ++i) members[partition.locate(points(0, i), points(1, i))].push_back(i);
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (members[s].empty()) continue;
    Eigen::Matrix2Xd sub(2, static_cast<Eigen::Index>(members[s].size()));
    for (std::size_t k = 0; k < members[s].size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = points.col(members[s][k]);
    const Eigen::VectorXd u = forward(partition.nets()[s], sub);
    for (std::size_t k = 0; k < members[s].size(); ++k) out(members[s][k]) = u(static_cast<Eigen::Index>(k));
  }
  return out;
}

std::string partition_to_json(const Partition& p) {
  nlohmann::json j;
  j["format"] = "addpinn-partition";
  j["version"] = 1;
  j["direction"] = to_string(p.direction());
  j["x_splits"] = p.x_splits();
  j["t_splits"] = p.t_splits();
  auto nets = nlohmann::json::array();
  for (const auto& net : p.nets()) nets.push_back(nlohmann::json::parse(network_to_json(net)));
  j["nets"] = std::move(nets);
  auto ifaces = nlohmann::json::array();
  for (const auto& s : p.interfaces())
    ifaces.push_back({{"orientation", s.orientation == Orientation::spatial ? "spatial" : "temporal"},
                      {"position", s.position},
                      {"shock_speed", s.shock_speed},
                      {"kind", s.kind == InterfaceKind::shock ? "shock" : "smooth"}});
  j["interfaces"] = std::move(ifaces);
  return j.dump();
}

Partition partition_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "addpinn-partition") throw std::runtime_error("checkpoint: not a partition file");
  std::vector<PinnNetwork> nets;
  for (const auto& n : j.at("nets")) nets.push_back(network_from_json(n.dump()));
  Partition p = Partition::grid(direction_from_string(j.at("direction").get<std::string>()),
                                j.at("x_splits").get<std::vector<double>>(),
                                j.at("t_splits").get<std::vector<double>>(), std::move(nets));
  const auto& ifaces = j.at("interfaces");
  if (ifaces.size() != p.interfaces().size()) throw std::runtime_error("checkpoint: interface count mismatch");
  for (std::size_t i = 0; i < ifaces.size(); ++i) {
    p.interfaces()[i].shock_speed = ifaces[i].at("shock_speed").get<double>();
    p.interfaces()[i].kind = ifaces[i].at("kind").get<std::string>() == "shock" ? InterfaceKind::shock : InterfaceKind::smooth;
  }
  return p;
}

}  // namespace addpinn
