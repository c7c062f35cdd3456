#pragma once

#include "addpinn/autodiff.hpp"
#include "addpinn/lwr.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace addpinn {

struct LossWeights {
  double data = 0.85;
  double pde = 0.05;
  double interface = 0.10;
};

struct CausalConfig {
  int n_bins = 10;
  double epsilon = 1.0;
};

struct LossParts {
  double data = 0.0;
  double pde = 0.0;
  double interface = 0.0;  // zero while a single subdomain exists
};

/// Mean squared error. When d_pred is given, scale * dL/dpred is added to it.
double data_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& obs, Eigen::VectorXd* d_pred = nullptr,
                 double scale = 1.0);

/// r = (A u_x - B u u_x - u_t) / sqrt(A^2 + B^2 + 1), evaluated with u = bundle.u.
Eigen::VectorXd pde_residual(const EvalBundle& bundle, const NondimCoeffs& coeffs);

/// pde_residual + eps * u_xx / sqrt(A^2 + B^2 + 1); requires a second-order bundle.
Eigen::VectorXd viscosity_residual(const EvalBundle& bundle, const NondimCoeffs& coeffs, double eps_visc);

/// Chain rule from dL/dr to the point adjoints of (u, u_x, u_t, u_xx).
void residual_backward(const EvalBundle& bundle, const NondimCoeffs& coeffs, double eps_visc,
                       const Eigen::VectorXd& d_residual, PointAdjoint& adj);

/// Time-rank bins: points sorted by t, split into min(n_bins, N) bins whose sizes differ by at
/// most one, larger bins first. Returns the bin of every point.
std::vector<int> assign_time_bins(std::span<const double> t, int n_bins);

/// Per-bin mean of r^2 (zero for empty bins).
std::vector<double> bin_mean_squares(std::span<const double> residuals, std::span<const int> bins, int n_bins);

/// w_j = exp(-epsilon * sum_{k<j} rbar_k^2).
std::vector<double> causal_weights(std::span<const double> bin_mean_sq, double epsilon);

/// Convenience: bins by t, then weights from the residuals.
std::vector<double> causal_weights(std::span<const double> t, std::span<const double> residuals,
                                   const CausalConfig& cfg);

/// One subdomain's collocation residuals with their (constant) causal weights.
struct ResidualBatch {
  Eigen::VectorXd residual;
  Eigen::VectorXd weight;  // empty means all ones
};

/// (1/n) sum_s mean_j w_j r_j^2. When d_residuals is given, scale * dL/dr is added per batch.
double pde_loss(std::span<const ResidualBatch> batches, std::vector<Eigen::VectorXd>* d_residuals = nullptr,
                double scale = 1.0);

double total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace addpinn
