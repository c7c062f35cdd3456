#include "addpinn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace addpinn {

double data_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& obs, Eigen::VectorXd* d_pred, double scale) {
  if (pred.size() != obs.size()) throw std::invalid_argument("data_loss: length mismatch");
  if (pred.size() == 0) throw std::invalid_argument("data_loss: empty observation set");
  const Eigen::VectorXd diff = pred - obs;
  const double n = static_cast<double>(pred.size());
  if (d_pred) *d_pred += (2.0 * scale / n) * diff;
  return diff.squaredNorm() / n;
}

Eigen::VectorXd pde_residual(const EvalBundle& b, const NondimCoeffs& c) {
  if (!b.has_first()) throw std::invalid_argument("pde_residual: bundle lacks first derivatives");
  const auto u = b.u.array();
  return ((c.A - c.B * u) * b.du_dx.array() - b.du_dt.array()).matrix() / c.norm();
}

Eigen::VectorXd viscosity_residual(const EvalBundle& b, const NondimCoeffs& c, double eps_visc) {
  if (!b.has_second()) throw std::invalid_argument("viscosity_residual: bundle lacks second derivative");
  return pde_residual(b, c) + (eps_visc / c.norm()) * b.d2u_dx2;
}

void residual_backward(const EvalBundle& b, const NondimCoeffs& c, double eps_visc, const Eigen::VectorXd& d_r,
                       PointAdjoint& adj) {
  const double inv = 1.0 / c.norm();
  const auto g = d_r.array();
  adj.u.array() += -c.B * inv * b.du_dx.array() * g;
  adj.du_dx.array() += (c.A - c.B * b.u.array()) * inv * g;
  adj.du_dt.array() += -inv * g;
  if (eps_visc != 0.0) {
    if (adj.d2u_dx2.size() != d_r.size()) throw std::invalid_argument("residual_backward: missing second-order adjoint");
    adj.d2u_dx2.array() += eps_visc * inv * g;
  }
}

std::vector<int> assign_time_bins(std::span<const double> t, int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("assign_time_bins: n_bins must be positive");
  const std::size_t n = t.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
  const std::size_t bins = std::min<std::size_t>(static_cast<std::size_t>(n_bins), n);
  std::vector<int> out(n, 0);
  if (bins == 0) return out;
  const std::size_t base = n / bins;
  const std::size_t extra = n % bins;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) out[order[pos++]] = static_cast<int>(b);
  }
  return out;
}

std::vector<double> bin_mean_squares(std::span<const double> residuals, std::span<const int> bins, int n_bins) {
  if (residuals.size() != bins.size()) throw std::invalid_argument("bin_mean_squares: length mismatch");
  std::vector<double> sum(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(n_bins), 0);
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const auto b = static_cast<std::size_t>(bins[i]);
    sum[b] += residuals[i] * residuals[i];
    ++count[b];
  }
  for (std::size_t b = 0; b < sum.size(); ++b)
    if (count[b]) sum[b] /= static_cast<double>(count[b]);
  return sum;
}

std::vector<double> causal_weights(std::span<const double> bin_mean_sq, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("causal_weights: epsilon must be non-negative");
  std::vector<double> w(bin_mean_sq.size());
  double prefix = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::exp(-epsilon * prefix);
    prefix += bin_mean_sq[j];
  }
  return w;
}

std::vector<double> causal_weights(std::span<const double> t, std::span<const double> residuals,
                                   const CausalConfig& cfg) {
  const auto bins = assign_time_bins(t, cfg.n_bins);
  const int used = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.n_bins), t.size()));
  return causal_weights(bin_mean_squares(residuals, bins, used), cfg.epsilon);
}

double pde_loss(std::span<const ResidualBatch> batches, std::vector<Eigen::VectorXd>* d_residuals, double scale) {
  if (batches.empty()) throw std::invalid_argument("pde_loss: no subdomains");
  if (d_residuals) d_residuals->resize(batches.size());
  const double inv_n = 1.0 / static_cast<double>(batches.size());
  double total = 0.0;
  for (std::size_t s = 0; s < batches.size(); ++s) {
    const auto& b = batches[s];
    if (b.residual.size() == 0) throw std::invalid_argument("pde_loss: empty subdomain batch");
    const double m = static_cast<double>(b.residual.size());
    const bool weighted = b.weight.size() == b.residual.size();
    Eigen::ArrayXd wr2 = b.residual.array().square();
    if (weighted) wr2 *= b.weight.array();
    total += inv_n * wr2.sum() / m;
    if (d_residuals) {
      Eigen::VectorXd g = (2.0 * scale * inv_n / m) * b.residual;
      if (weighted) g.array() *= b.weight.array();
      (*d_residuals)[s] = std::move(g);
    }
  }
  return total;
}

double total_loss(const LossParts& p, const LossWeights& w) {
  return w.data * p.data + w.pde * p.pde + w.interface * p.interface;
}

}  // namespace addpinn
