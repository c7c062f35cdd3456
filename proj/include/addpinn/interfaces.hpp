#pragma once

#include "addpinn/autodiff.hpp"
#include "addpinn/lwr.hpp"
#include "addpinn/partition.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace addpinn {

/// Fresh uniform samples along the interface's free coordinate, deterministic in (seed, step, index).
Eigen::VectorXd sample_interface(const InterfaceState& state, int n_samples, std::uint64_t seed, std::uint64_t step,
                                 std::size_t interface_index = 0);

/// Shock iff mean |rho_L - rho_R| > delta_shock with rho = 1 - u (strict).
InterfaceKind classify(const Eigen::VectorXd& u_left, const Eigen::VectorXd& u_right, double delta_shock);

/// Adjoint accumulators for a two-sided interface term.
struct JumpAdjoint {
  Eigen::VectorXd left;   // dL/d(left quantity)
  Eigen::VectorXd right;  // dL/d(right quantity)
  double shock_speed = 0.0;

  explicit JumpAdjoint(Eigen::Index n = 0) : left(Eigen::VectorXd::Zero(n)), right(Eigen::VectorXd::Zero(n)) {}
};

/// mean (uL-uR)^2 + mean (uxL-uxR)^2. Value gradients go to `values`, x-gradient ones to `slopes`.
double smooth_loss(const Eigen::VectorXd& u_left, const Eigen::VectorXd& u_right, const Eigen::VectorXd& ux_left,
                   const Eigen::VectorXd& ux_right, JumpAdjoint* values = nullptr, JumpAdjoint* slopes = nullptr,
                   double scale = 1.0);

/// mean [s (rhoL - rhoR) - (q(rhoL) - q(rhoR))]^2. Densities are not range-checked.
double rh_loss(const Eigen::VectorXd& rho_left, const Eigen::VectorXd& rho_right, double s,
               const FundamentalDiagram& fd, JumpAdjoint* adj = nullptr, double scale = 1.0);

/// mean relu(s - lambda(rhoL))^2 + relu(lambda(rhoR) - s)^2.
double entropy_loss(const Eigen::VectorXd& rho_left, const Eigen::VectorXd& rho_right, double s,
                    const FundamentalDiagram& fd, JumpAdjoint* adj = nullptr, double scale = 1.0);

/// mean (u_after - u_before)^2 at a temporal interface. `left` is before, `right` after.
double temporal_c0_loss(const Eigen::VectorXd& u_before, const Eigen::VectorXd& u_after, JumpAdjoint* adj = nullptr,
                        double scale = 1.0);

/// XPINN coupling at one interface: mean (rL - rR)^2 + mean [(uL - avg)^2 + (uR - avg)^2].
double xpinn_pair_loss(const EvalBundle& left, const EvalBundle& right, const NondimCoeffs& coeffs,
                       PointAdjoint* adj_left = nullptr, PointAdjoint* adj_right = nullptr, double scale = 1.0);

struct InterfaceLossResult {
  double value = 0.0;
  std::vector<double> per_interface;
  std::vector<InterfaceKind> kinds;
};

/// Sum over interfaces: RH + w_entropy * entropy on shock-classified spatial interfaces, smooth C0/C1
/// on the other spatial ones, C0 on temporal ones. Adjoints are scaled by `scale` and written through
/// the builder; shock-speed gradients land in builder.shock_speed_grads()[interface index].
InterfaceLossResult interface_loss(const Partition& partition, LossBuilder& builder, const InterfaceConfig& cfg,
                                   std::uint64_t seed, std::uint64_t step, double scale = 1.0);

/// XPINN coupling summed over all interfaces of the partition (shock speeds unused).
double xpinn_interface_loss(const Partition& partition, LossBuilder& builder, const NondimCoeffs& coeffs,
                            int n_samples, std::uint64_t seed, std::uint64_t step, double scale = 1.0);

/// Value-only convenience for diagnostics and tests.
InterfaceLossResult interface_loss(const Partition& partition, const InterfaceConfig& cfg, std::uint64_t seed,
                                   std::uint64_t step);

}  // namespace addpinn
