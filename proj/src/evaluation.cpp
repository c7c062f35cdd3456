#include "addpinn/evaluation.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace addpinn {

namespace {

void check_shapes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("evaluation: shape mismatch");
  if (a.size() == 0) throw std::invalid_argument("evaluation: empty field");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

Zone zone_of(double truth_mph) {
  if (truth_mph < kCongestedBelowMph) return Zone::congested;
  if (truth_mph > kFreeFlowAboveMph) return Zone::free_flow;
  return Zone::transition;
}

std::string to_string(Zone z) {
  switch (z) {
    case Zone::congested: return "congested";
    case Zone::transition: return "transition";
    case Zone::free_flow: return "free";
  }
  return "?";
}

double relative_l2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  check_shapes(pred, truth);
  const double denom = truth.norm();
  if (denom == 0.0) throw std::invalid_argument("relative_l2: truth has zero norm");
  return 100.0 * (pred - truth).norm() / denom;
}

double relative_l2(const SpeedField& pred, const SpeedField& truth) { return relative_l2(pred.values(), truth.values()); }

EvalReport rmse_mae(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  check_shapes(pred, truth);
  EvalReport r;
  const Eigen::ArrayXXd err = (pred - truth).array();
  r.rmse_mph = std::sqrt(err.square().mean());
  r.mae_mph = err.abs().mean();
  r.rel_l2_pct = relative_l2(pred, truth);
  std::array<double, 3> sums{};
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      const auto z = static_cast<std::size_t>(zone_of(truth(i, j)));
      sums[z] += std::abs(err(i, j));
      ++r.zone_counts[z];
    }
  for (std::size_t z = 0; z < 3; ++z)
    if (r.zone_counts[z]) r.zone_mae[z] = sums[z] / static_cast<double>(r.zone_counts[z]);
  return r;
}

SpeedField predict_field(const Partition& model, const SpeedField& like, const NormStats& stats) {
  const int nc = like.n_cells();
  const int ns = like.n_steps();
  Eigen::Matrix2Xd pts(2, static_cast<Eigen::Index>(nc) * ns);
  for (int k = 0; k < ns; ++k)
    for (int c = 0; c < nc; ++c) {
      const Eigen::Index col = static_cast<Eigen::Index>(k) * nc + c;
      pts(0, col) = like.x_hat(c);
      pts(1, col) = like.t_hat(k);
    }
  const Eigen::VectorXd u = piecewise_predict(model, pts);
  Eigen::MatrixXd values = Eigen::Map<const Eigen::MatrixXd>(u.data(), nc, ns);
  return SpeedField(denormalize(values, stats), like.x_min(), like.x_max(), like.t_range());
}

EvalReport evaluate(const Partition& model, const SpeedField& truth, const NormStats& stats) {
  return rmse_mae(predict_field(model, truth, stats).values(), truth.values());
}

PairedStats paired_stats(const std::vector<double>& diffs) {
  PairedStats s;
  s.n_configs = diffs.size();
  if (diffs.empty()) throw std::invalid_argument("paired_stats: no differences");
  for (double d : diffs) (d > 0 ? s.wins : d < 0 ? s.losses : s.ties) += 1;
  s.mean_diff = mean_of(diffs);
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (diffs.size() < 2) {
    s.ci_low = s.ci_high = s.t_stat = s.p_value = s.cohens_d = nan;
    return s;
  }
  const double sd = sample_std(diffs);
  const double n = static_cast<double>(diffs.size());
  if (sd == 0.0) {
    s.ci_low = s.ci_high = s.mean_diff;
    if (s.mean_diff == 0.0) {
      s.t_stat = 0.0;
      s.p_value = 1.0;
      s.cohens_d = 0.0;
    } else {
      s.t_stat = s.cohens_d = std::copysign(inf, s.mean_diff);
      s.p_value = 0.0;
    }
    return s;
  }
  const double se = sd / std::sqrt(n);
  boost::math::students_t dist(n - 1.0);
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  s.ci_low = s.mean_diff - q * se;
  s.ci_high = s.mean_diff + q * se;
  s.t_stat = s.mean_diff / se;
  s.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(s.t_stat)));
  s.cohens_d = s.mean_diff / sd;
  return s;
}

Aggregate aggregate(const std::vector<RunSummary>& runs, const std::string& reference) {
  using Config = std::pair<std::string, int>;  // dataset, n_sensors
  std::map<std::string, std::map<Config, std::vector<const RunSummary*>>> cells;
  for (const auto& r : runs) cells[r.method][{r.dataset, r.n_sensors}].push_back(&r);
  if (cells.empty()) throw std::invalid_argument("aggregate: no runs");

  std::optional<std::set<std::uint64_t>> seeds;
  std::optional<std::set<Config>> configs;
  for (const auto& [method, by_config] : cells) {
    std::set<Config> cfgs;
    for (const auto& [cfg, list] : by_config) {
      cfgs.insert(cfg);
      std::set<std::uint64_t> s;
      for (const auto* r : list) s.insert(r->seed);
      if (s.size() != list.size()) throw std::invalid_argument("aggregate: duplicate seed in " + method);
      if (!seeds) seeds = s;
      if (*seeds != s) throw std::invalid_argument("aggregate: unbalanced seeds for " + method);
    }
    if (!configs) configs = cfgs;
    if (*configs != cfgs) throw std::invalid_argument("aggregate: unbalanced configurations for " + method);
  }

  Aggregate agg;
  std::map<std::string, std::map<Config, double>> means;
  for (const auto& [method, by_config] : cells)
    for (const auto& [cfg, list] : by_config) {
      std::vector<double> l2, rmse;
      for (const auto* r : list) {
        l2.push_back(r->rel_l2_pct);
        rmse.push_back(r->rmse_mph);
      }
      ConfigMean row;
      row.method = method;
      row.dataset = cfg.first;
      row.n_sensors = cfg.second;
      row.n_seeds = list.size();
      row.rel_l2_mean = mean_of(l2);
      row.rel_l2_std = sample_std(l2);
      row.rmse_mean = mean_of(rmse);
      row.rmse_std = sample_std(rmse);
      means[method][cfg] = row.rel_l2_mean;
      agg.rows.push_back(row);
    }
  for (auto& row : agg.rows)
    for (const auto& [other, by_config] : means) {
      if (other == row.method) continue;
      const double theirs = by_config.at({row.dataset, row.n_sensors});
      if (row.rel_l2_mean < theirs) ++row.wins;
      if (row.rel_l2_mean > theirs) ++row.losses;
    }
  std::sort(agg.rows.begin(), agg.rows.end(), [](const ConfigMean& a, const ConfigMean& b) {
    return std::tie(a.method, a.n_sensors, a.dataset) < std::tie(b.method, b.n_sensors, b.dataset);
  });

  if (means.count(reference)) {
    for (const auto& [other, by_config] : means) {
      if (other == reference) continue;
      std::vector<double> diffs;
      for (const auto& [cfg, mine] : means.at(reference)) diffs.push_back(by_config.at(cfg) - mine);
      PairedStats s = paired_stats(diffs);
      s.method = reference;
      s.other = other;
      agg.comparisons.push_back(s);
    }
  }
  return agg;
}

std::string aggregate_csv(const Aggregate& agg) {
  std::ostringstream out;
  out.precision(10);
  out << "method,dataset,n_s,n_seeds,rel_l2_mean,rel_l2_std,rmse_mean,rmse_std,wins,losses\n";
  for (const auto& r : agg.rows)
    out << r.method << ',' << r.dataset << ',' << r.n_sensors << ',' << r.n_seeds << ',' << r.rel_l2_mean << ','
        << r.rel_l2_std << ',' << r.rmse_mean << ',' << r.rmse_std << ',' << r.wins << ',' << r.losses << '\n';
  return out.str();
}

std::string comparisons_csv(const Aggregate& agg) {
  std::ostringstream out;
  out.precision(10);
  out << "method,other,n_configs,wins,losses,ties,mean_diff,ci_low,ci_high,t,p,cohens_d\n";
  for (const auto& c : agg.comparisons)
    out << c.method << ',' << c.other << ',' << c.n_configs << ',' << c.wins << ',' << c.losses << ',' << c.ties << ','
        << c.mean_diff << ',' << c.ci_low << ',' << c.ci_high << ',' << c.t_stat << ',' << c.p_value << ','
        << c.cohens_d << '\n';
  return out.str();
}

}  // namespace addpinn
