#pragma once

#include "addpinn/autodiff.hpp"
#include "addpinn/losses.hpp"
#include "addpinn/lwr.hpp"
#include "addpinn/network.hpp"
#include "addpinn/sampling.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace testing_support {

using namespace addpinn;

inline PinnNetwork small_net(std::uint64_t seed, double sigma = 2.0) {
  return init_network(Architecture{{2, 8, 6, 6, 1}, sigma}, seed);
}

inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Max relative error of every input derivative against central differences.
inline double input_derivative_error(const PinnNetwork& net, const Eigen::Matrix2Xd& pts, double h = 1e-5) {
  const EvalBundle b = eval_with_input_derivs(net, pts, true);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const double x = pts(0, i), t = pts(1, i);
    const double fx = (forward(net, x + h, t) - forward(net, x - h, t)) / (2 * h);
    const double ft = (forward(net, x, t + h) - forward(net, x, t - h)) / (2 * h);
    Eigen::Matrix2Xd pm(2, 2);
    pm << x + h, x - h, t, t;
    const EvalBundle bm = eval_with_input_derivs(net, pm, false);
    const double fxx = (bm.du_dx(0) - bm.du_dx(1)) / (2 * h);
    worst = std::max({worst, rel_err(b.du_dx(i), fx), rel_err(b.du_dt(i), ft), rel_err(b.d2u_dx2(i), fxx),
                      rel_err(b.u(i), forward(net, x, t), 1e-12)});
  }
  return worst;
}

/// Data MSE plus viscous-residual MSE on one network.
inline double composite_loss(const PinnNetwork& net, const Eigen::Matrix2Xd& data_pts, const Eigen::VectorXd& targets,
                             const Eigen::Matrix2Xd& colloc, const NondimCoeffs& coeffs, ModelGradients* grads) {
  const PinnNetwork* p = &net;
  auto lg = loss_gradients(std::span<const PinnNetwork* const>(&p, 1), 0, [&](LossBuilder& b) {
    auto& d = b.evaluate(0, data_pts, DerivOrder::value);
    double loss = data_loss(d.bundle.u, targets, &d.adjoint.u);
    auto& c = b.evaluate(0, colloc, DerivOrder::second);
    const Eigen::VectorXd r = viscosity_residual(c.bundle, coeffs, 0.1);
    std::vector<ResidualBatch> batches{{r, {}}};
    std::vector<Eigen::VectorXd> dr;
    loss += pde_loss(batches, &dr);
    residual_backward(c.bundle, coeffs, 0.1, dr[0], c.adjoint);
    return loss;
  });
  if (grads) *grads = lg.grads;
  return lg.loss;
}

/// Max relative error of `n_params` random parameter gradients against central differences.
inline double parameter_gradient_error(PinnNetwork net, std::uint64_t seed, int n_params, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const Eigen::Matrix2Xd data_pts = uniform_points(16, Box{}, seed + 1);
  Eigen::VectorXd targets(16);
  for (auto& v : targets) v = uni(rng);
  const Eigen::Matrix2Xd colloc = uniform_points(24, Box{}, seed + 2);
  const NondimCoeffs coeffs{1.3, 0.7, 1.0};

  ModelGradients g;
  composite_loss(net, data_pts, targets, colloc, coeffs, &g);
  double worst = 0.0;
  for (int k = 0; k < n_params; ++k) {
    const auto l = static_cast<std::size_t>(rng() % net.weights.size());
    const bool bias = rng() % 4 == 0;
    double* param;
    double analytic;
    if (bias) {
      const auto i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(net.biases[l].size()));
      param = &net.biases[l](i);
      analytic = g.nets[0].biases[l](i);
    } else {
      auto& w = net.weights[l];
      const auto i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(w.rows()));
      const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(w.cols()));
      param = &w(i, j);
      analytic = g.nets[0].weights[l](i, j);
    }
    const double keep = *param;
    *param = keep + h;
    const double up = composite_loss(net, data_pts, targets, colloc, coeffs, nullptr);
    *param = keep - h;
    const double down = composite_loss(net, data_pts, targets, colloc, coeffs, nullptr);
    *param = keep;
    worst = std::max(worst, rel_err(analytic, (up - down) / (2 * h)));
  }
  return worst;
}

}  // namespace testing_support
