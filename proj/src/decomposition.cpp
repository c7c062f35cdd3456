#include "addpinn/decomposition.hpp"

#include "addpinn/autodiff.hpp"
#include "addpinn/losses.hpp"
#include "addpinn/optim.hpp"
#include "addpinn/sampling.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace addpinn {

namespace {

constexpr double kIndicatorEps = 1e-10;
constexpr Eigen::Index kEvalChunk = 2048;

enum class Extremum { max, min };

// Strict local extrema of the interior; plateaus report their middle index.
std::vector<int> local_extrema(const std::vector<double>& s, Extremum kind) {
  std::vector<int> out;
  const int n = static_cast<int>(s.size());
  auto rises = [&](double a, double b) { return kind == Extremum::max ? b > a : b < a; };
  int i = 1;
  while (i < n - 1) {
    if (rises(s[static_cast<std::size_t>(i - 1)], s[static_cast<std::size_t>(i)])) {
      int j = i;
      while (j + 1 < n && s[static_cast<std::size_t>(j + 1)] == s[static_cast<std::size_t>(i)]) ++j;
      if (j + 1 < n && rises(s[static_cast<std::size_t>(j + 1)], s[static_cast<std::size_t>(j)])) out.push_back((i + j) / 2);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

double grid_position(int index, int n) { return n > 1 ? static_cast<double>(index) / (n - 1) : 0.0; }

Eigen::VectorXd squared_residuals(const PinnNetwork& net, const Eigen::Matrix2Xd& pts, const NondimCoeffs& coeffs) {
  Eigen::VectorXd out(pts.cols());
  for (Eigen::Index start = 0; start < pts.cols(); start += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, pts.cols() - start);
    const EvalBundle b = eval_with_input_derivs(net, pts.middleCols(start, len), false);
    out.segment(start, len) = pde_residual(b, coeffs).array().square().matrix();
  }
  return out;
}

SplitDecision place(const Partition& coarse, const NondimCoeffs& coeffs, Direction direction, bool require_peaks,
                    const DecompositionConfig& cfg) {
  SplitDecision d;
  d.direction = direction;
  const int max_splits = cfg.max_subdomains > 0 ? std::max(cfg.max_subdomains - 1, 1) : 0;
  const Eigen::MatrixXd grid = residual_grid(coarse, coeffs, cfg.n_x, cfg.n_t);

  auto fail = [&](const std::string& why) {
    d.decomposed = false;
    d.x_splits.clear();
    d.t_splits.clear();
    d.reason = "single-domain fallback: " + why;
    return d;
  };

  if (direction == Direction::spatial || direction == Direction::temporal) {
    const Axis axis = direction == Direction::spatial ? Axis::x : Axis::t;
    const auto profile = profile_from_residuals(grid, axis);
    auto& peaks = axis == Axis::x ? d.x_peaks : d.t_peaks;
    const auto splits = plan_axis(profile, max_splits, cfg.delta_min, require_peaks, &peaks);
    if (!splits) return fail(peaks.empty() ? "no residual peaks" : "no valid split placement");
    (axis == Axis::x ? d.x_splits : d.t_splits) = *splits;
  } else {
    const auto px = profile_from_residuals(grid, Axis::x);
    const auto pt = profile_from_residuals(grid, Axis::t);
    d.x_peaks = detect_peaks(px.smoothed);
    d.t_peaks = detect_peaks(pt.smoothed);
    if (require_peaks && d.x_peaks.empty() && d.t_peaks.empty()) return fail("no residual peaks");
    const auto xs = plan_axis(px, 1, cfg.delta_min, false);
    const auto ts = plan_axis(pt, 1, cfg.delta_min, false);
    if (!xs || !ts) return fail("no valid split placement");
    d.x_splits = *xs;
    d.t_splits = *ts;
  }
  d.decomposed = true;
  std::ostringstream why;
  why << "decomposed into " << (d.x_splits.size() + 1) * (d.t_splits.size() + 1) << " subdomains";
  d.reason = why.str();
  return d;
}

}  // namespace

std::string to_string(DecompositionMode m) {
  return m == DecompositionMode::shock_screened ? "shock_screened" : "decomposition_enabled";
}

DecompositionMode mode_from_string(const std::string& name) {
  if (name == "shock_screened") return DecompositionMode::shock_screened;
  if (name == "decomposition_enabled") return DecompositionMode::decomposition_enabled;
  throw std::invalid_argument("unknown decomposition mode '" + name + "'");
}

std::string decision_to_json(const SplitDecision& d) {
  nlohmann::json j = {{"decided", d.decomposed},      {"direction", to_string(d.direction)},
                      {"S", d.indicator},             {"x_splits", d.x_splits},
                      {"t_splits", d.t_splits},       {"x_peaks", d.x_peaks},
                      {"t_peaks", d.t_peaks},         {"reason", d.reason}};
  j["splits"] = d.direction == Direction::temporal ? d.t_splits : d.x_splits;
  return j.dump(2);
}

double shock_indicator(const ObservationSet& obs) {
  std::map<int, std::vector<std::pair<int, double>>> series;
  const bool can_normalize = obs.stats.u_max > obs.stats.u_min;
  for (const auto& r : obs.records)
    series[r.cell].emplace_back(r.step, can_normalize ? obs.stats.normalize(r.speed) : r.speed);
  if (series.empty()) throw std::invalid_argument("shock_indicator: no observations");
  for (auto& [cell, s] : series) std::sort(s.begin(), s.end());

  std::vector<double> gx, gt;
  for (auto it = series.begin(); it != series.end(); ++it) {
    const auto& a = it->second;
    double sum = 0.0;
    int count = 0;
    for (std::size_t k = 1; k < a.size(); ++k) {
      const int dt = a[k].first - a[k - 1].first;
      if (dt <= 0) continue;
      sum += std::abs(a[k].second - a[k - 1].second) / dt;
      ++count;
    }
    if (count) gt.push_back(sum / count);

    auto next = std::next(it);
    if (next == series.end()) continue;
    const auto& b = next->second;
    const double dx = next->first - it->first;
    double pair_sum = 0.0;
    int common = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i].first < b[j].first) {
        ++i;
      } else if (b[j].first < a[i].first) {
        ++j;
      } else {
        pair_sum += std::abs(b[j].second - a[i].second) / dx;
        ++common;
        ++i;
        ++j;
      }
    }
    if (common) gx.push_back(pair_sum / common);
  }
  if (series.size() >= 2 && gx.empty()) throw std::invalid_argument("shock_indicator: sensors share no timestamps");

  auto ratio = [](const std::vector<double>& g) {
    if (g.empty()) return 0.0;
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    return *std::max_element(g.begin(), g.end()) / (mean + kIndicatorEps);
  };
  return std::max(ratio(gx), ratio(gt));
}

Eigen::MatrixXd residual_grid(const Partition& partition, const NondimCoeffs& coeffs, int n_x, int n_t) {
  if (n_x < 2 || n_t < 2) throw std::invalid_argument("residual_grid: grid too small");
  Eigen::MatrixXd out(n_x, n_t);
  std::vector<std::vector<std::pair<int, int>>> members(partition.n_subdomains());
  for (int i = 0; i < n_x; ++i)
    for (int j = 0; j < n_t; ++j)
      members[partition.locate(grid_position(i, n_x), grid_position(j, n_t))].emplace_back(i, j);
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (members[s].empty()) continue;
    Eigen::Matrix2Xd pts(2, static_cast<Eigen::Index>(members[s].size()));
    for (std::size_t k = 0; k < members[s].size(); ++k) {
      pts(0, static_cast<Eigen::Index>(k)) = grid_position(members[s][k].first, n_x);
      pts(1, static_cast<Eigen::Index>(k)) = grid_position(members[s][k].second, n_t);
    }
    const Eigen::VectorXd r2 = squared_residuals(partition.nets()[s], pts, coeffs);
    for (std::size_t k = 0; k < members[s].size(); ++k)
      out(members[s][k].first, members[s][k].second) = r2(static_cast<Eigen::Index>(k));
  }
  return out;
}

ResidualProfile profile_from_residuals(const Eigen::MatrixXd& residuals, Axis axis) {
  ResidualProfile p;
  p.axis = axis;
  const Eigen::VectorXd means = axis == Axis::x ? Eigen::VectorXd(residuals.rowwise().mean())
                                                : Eigen::VectorXd(residuals.colwise().mean().transpose());
  const int n = static_cast<int>(means.size());
  p.values.assign(means.data(), means.data() + n);
  p.positions.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p.positions[static_cast<std::size_t>(i)] = grid_position(i, n);
  p.smoothed = smooth_profile(p.values, smoothing_kernel(n));
  return p;
}

ResidualProfile residual_profile(const Partition& partition, const NondimCoeffs& coeffs, Axis axis, int n_x, int n_t) {
  return profile_from_residuals(residual_grid(partition, coeffs, n_x, n_t), axis);
}

int smoothing_kernel(int n) {
  int k = std::max(3, n / 20);
  if (k % 2 == 0) ++k;
  return k;
}

std::vector<double> smooth_profile(const std::vector<double>& values, int kernel) {
  if (values.empty()) throw std::invalid_argument("smooth_profile: empty profile");
  const int n = static_cast<int>(values.size());
  const int half = kernel / 2;
  std::vector<double> out(values.size());
  for (int i = 0; i < n; ++i) {
    const int h = std::min({half, i, n - 1 - i});
    double sum = 0.0;
    for (int k = i - h; k <= i + h; ++k) sum += values[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = sum / (2 * h + 1);
  }
  return out;
}

std::vector<int> detect_peaks(const std::vector<double>& s) {
  const int n = static_cast<int>(s.size());
  if (n < 3) return {};
  const double global_max = *std::max_element(s.begin(), s.end());
  if (!(global_max > 0.0)) return {};
  const int margin = n / 10;
  const int min_distance = std::max(1, n / 10);

  std::vector<int> candidates;
  for (int i : local_extrema(s, Extremum::max))
    if (i >= margin && i <= n - 1 - margin && s[static_cast<std::size_t>(i)] > 0.30 * global_max) candidates.push_back(i);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](int a, int b) { return s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(b)]; });
  std::vector<int> kept;
  for (int c : candidates) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](int k) { return std::abs(k - c) >= min_distance; });
    if (clear) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<double> select_splits(const std::vector<double>& s, int k, double delta_min) {
  if (k < 1) return {};
  const int n = static_cast<int>(s.size());
  std::vector<int> minima = local_extrema(s, Extremum::min);
  std::stable_sort(minima.begin(), minima.end(),
                   [&](int a, int b) { return s[static_cast<std::size_t>(a)] < s[static_cast<std::size_t>(b)]; });

  auto valid = [&](double pos, const std::vector<double>& taken) {
    if (pos < delta_min || pos > 1.0 - delta_min) return false;
    return std::all_of(taken.begin(), taken.end(), [&](double t) { return std::abs(t - pos) >= delta_min; });
  };

  std::vector<double> splits;
  for (int m : minima) {
    if (static_cast<int>(splits.size()) == k) break;
    const double pos = grid_position(m, n);
    if (valid(pos, splits)) splits.push_back(pos);
  }
  if (static_cast<int>(splits.size()) < k) {
    splits.clear();
    for (int j = 1; j <= k; ++j) {
      const double pos = static_cast<double>(j) / (k + 1);
      if (!valid(pos, splits)) return {};
      splits.push_back(pos);
    }
  }
  std::sort(splits.begin(), splits.end());
  return splits;
}

std::optional<std::vector<double>> plan_axis(const ResidualProfile& profile, int max_splits, double delta_min,
                                             bool require_peaks, std::vector<int>* peaks_out) {
  const auto peaks = detect_peaks(profile.smoothed);
  if (peaks_out) *peaks_out = peaks;
  if (peaks.empty() && require_peaks) return std::nullopt;
  int k = std::max<int>(1, static_cast<int>(peaks.size()));
  if (max_splits > 0) k = std::min(k, max_splits);
  auto splits = select_splits(profile.smoothed, k, delta_min);
  if (splits.empty()) return std::nullopt;
  return splits;
}

SplitDecision decide(const ObservationSet& obs, const Partition& coarse, const NondimCoeffs& coeffs,
                     DecompositionMode mode, Direction direction, const DecompositionConfig& cfg) {
  double indicator = 0.0;
  std::string indicator_note;
  try {
    indicator = shock_indicator(obs);
  } catch (const std::exception& e) {
    indicator_note = std::string(" (indicator unavailable: ") + e.what() + ")";
  }
  SplitDecision d;
  if (mode == DecompositionMode::shock_screened && !(indicator > cfg.tau_shock)) {
    d.direction = direction;
    std::ostringstream why;
    why << "single-domain fallback: shock indicator " << indicator << " <= " << cfg.tau_shock << indicator_note;
    d.reason = why.str();
  } else {
    d = place(coarse, coeffs, direction, mode == DecompositionMode::shock_screened, cfg);
  }
  d.indicator = indicator;
  return d;
}

SplitDecision split_temporal(const Partition& coarse, const NondimCoeffs& coeffs, const DecompositionConfig& cfg) {
  return place(coarse, coeffs, Direction::temporal, true, cfg);
}

SplitDecision split_spacetime(const Partition& coarse, const NondimCoeffs& coeffs, const DecompositionConfig& cfg) {
  return place(coarse, coeffs, Direction::spacetime, false, cfg);
}

Partition create_children(const PinnNetwork& parent, const SplitDecision& decision, const Architecture& child_arch,
                          const ChildInitConfig& cfg, std::uint64_t seed, ChildInitReport* report) {
  const std::size_t n_x = decision.x_splits.size() + 1;
  const std::size_t n_t = decision.t_splits.size() + 1;
  std::vector<PinnNetwork> children;
  for (std::size_t s = 0; s < n_x * n_t; ++s)
    children.push_back(warm_start_copy(parent, child_arch, derive_seed(seed, Stream::network_init, {100 + s})));
  Partition partition = Partition::grid(decision.direction, decision.x_splits, decision.t_splits, std::move(children));

  ChildInitReport rep;
  for (std::size_t s = 0; s < partition.n_subdomains(); ++s) {
    auto& child = partition.nets()[s];
    const Eigen::Matrix2Xd pts = uniform_points(cfg.points, partition.subdomain(s),
                                                derive_seed(seed, Stream::warm_start_points, {s}));
    const Eigen::VectorXd target = forward(parent, pts);
    rep.initial_mse.push_back((forward(child, pts) - target).squaredNorm() / static_cast<double>(pts.cols()));
    Adam adam;
    PinnNetwork* net_ptr = &child;
    const PinnNetwork* const_ptr = net_ptr;
    for (int e = 0; e < cfg.epochs; ++e) {
      auto lg = loss_gradients(std::span<const PinnNetwork* const>(&const_ptr, 1), 0, [&](LossBuilder& b) {
        auto& ev = b.evaluate(0, pts, DerivOrder::value);
        return data_loss(ev.bundle.u, target, &ev.adjoint.u);
      });
      const auto blocks = param_blocks(std::span<PinnNetwork>(net_ptr, 1), lg.grads);
      adam.step(blocks, cfg.lr);
    }
    rep.final_mse.push_back((forward(child, pts) - target).squaredNorm() / static_cast<double>(pts.cols()));
  }
  rep.rms_gap = warm_start_gap(partition, parent, 1000, derive_seed(seed, Stream::evaluation, {1}));
  if (report) *report = std::move(rep);
  return partition;
}

double warm_start_gap(const Partition& partition, const PinnNetwork& parent, int n, std::uint64_t seed) {
  const Eigen::Matrix2Xd pts = uniform_points(n, Box{}, seed);
  const Eigen::VectorXd diff = piecewise_predict(partition, pts) - forward(parent, pts);
  return std::sqrt(diff.squaredNorm() / static_cast<double>(n));
}

}  // namespace addpinn
