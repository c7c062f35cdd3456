#include "addpinn/interfaces.hpp"

#include "addpinn/losses.hpp"
#include "addpinn/sampling.hpp"

#include <stdexcept>

namespace addpinn {

namespace {

void check_lengths(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("interface loss: sample count mismatch");
  if (a.size() == 0) throw std::invalid_argument("interface loss: no samples");
}

Eigen::Matrix2Xd interface_points(const InterfaceState& s, const Eigen::VectorXd& samples) {
  Eigen::Matrix2Xd pts(2, samples.size());
  if (s.orientation == Orientation::spatial) {
    pts.row(0).setConstant(s.position);
    pts.row(1) = samples.transpose();
  } else {
    pts.row(0) = samples.transpose();
    pts.row(1).setConstant(s.position);
  }
  return pts;
}

}  // namespace

Eigen::VectorXd sample_interface(const InterfaceState& state, int n_samples, std::uint64_t seed, std::uint64_t step,
                                 std::size_t interface_index) {
  Rng rng(derive_seed(seed, Stream::interface_samples, {step, interface_index}));
  std::uniform_real_distribution<double> dist(state.lo, state.hi);
  Eigen::VectorXd out(n_samples);
  for (int i = 0; i < n_samples; ++i) out(i) = dist(rng);
  return out;
}

InterfaceKind classify(const Eigen::VectorXd& u_left, const Eigen::VectorXd& u_right, double delta_shock) {
  check_lengths(u_left, u_right);
  // rho = 1 - u on both sides, so the density jump equals the speed jump.
  const double jump = ((1.0 - u_left.array()) - (1.0 - u_right.array())).abs().mean();
  return jump > delta_shock ? InterfaceKind::shock : InterfaceKind::smooth;
}

double smooth_loss(const Eigen::VectorXd& u_l, const Eigen::VectorXd& u_r, const Eigen::VectorXd& ux_l,
                   const Eigen::VectorXd& ux_r, JumpAdjoint* values, JumpAdjoint* slopes, double scale) {
  check_lengths(u_l, u_r);
  check_lengths(ux_l, ux_r);
  const double n = static_cast<double>(u_l.size());
  const Eigen::VectorXd dv = u_l - u_r;
  const Eigen::VectorXd dg = ux_l - ux_r;
  if (values) {
    values->left += (2.0 * scale / n) * dv;
    values->right -= (2.0 * scale / n) * dv;
  }
  if (slopes) {
    slopes->left += (2.0 * scale / n) * dg;
    slopes->right -= (2.0 * scale / n) * dg;
  }
  return dv.squaredNorm() / n + dg.squaredNorm() / n;
}

double rh_loss(const Eigen::VectorXd& rho_l, const Eigen::VectorXd& rho_r, double s, const FundamentalDiagram& fd,
               JumpAdjoint* adj, double scale) {
  check_lengths(rho_l, rho_r);
  const double n = static_cast<double>(rho_l.size());
  const auto rl = rho_l.array();
  const auto rr = rho_r.array();
  const Eigen::ArrayXd q_l = fd.v_f * rl * (1.0 - rl / fd.rho_jam);
  const Eigen::ArrayXd q_r = fd.v_f * rr * (1.0 - rr / fd.rho_jam);
  const Eigen::ArrayXd m = s * (rl - rr) - (q_l - q_r);
  if (adj) {
    const Eigen::ArrayXd dq_l = fd.v_f * (1.0 - 2.0 * rl / fd.rho_jam);
    const Eigen::ArrayXd dq_r = fd.v_f * (1.0 - 2.0 * rr / fd.rho_jam);
    const Eigen::ArrayXd g = (2.0 * scale / n) * m;
    adj->left.array() += g * (s - dq_l);
    adj->right.array() += g * (dq_r - s);
    adj->shock_speed += (g * (rl - rr)).sum();
  }
  return m.square().sum() / n;
}

double entropy_loss(const Eigen::VectorXd& rho_l, const Eigen::VectorXd& rho_r, double s,
                    const FundamentalDiagram& fd, JumpAdjoint* adj, double scale) {
  check_lengths(rho_l, rho_r);
  const double n = static_cast<double>(rho_l.size());
  const Eigen::ArrayXd lam_l = fd.v_f * (1.0 - 2.0 * rho_l.array() / fd.rho_jam);
  const Eigen::ArrayXd lam_r = fd.v_f * (1.0 - 2.0 * rho_r.array() / fd.rho_jam);
  const Eigen::ArrayXd e1 = (s - lam_l).max(0.0);
  const Eigen::ArrayXd e2 = (lam_r - s).max(0.0);
  if (adj) {
    const double c = 2.0 * scale / n;
    const double dlam = -2.0 * fd.v_f / fd.rho_jam;
    adj->left.array() += c * e1 * (-dlam);
    adj->right.array() += c * e2 * dlam;
    adj->shock_speed += c * (e1 - e2).sum();
  }
  return (e1.square() + e2.square()).sum() / n;
}

double temporal_c0_loss(const Eigen::VectorXd& u_before, const Eigen::VectorXd& u_after, JumpAdjoint* adj,
                        double scale) {
  check_lengths(u_before, u_after);
  const double n = static_cast<double>(u_before.size());
  const Eigen::VectorXd d = u_after - u_before;
  if (adj) {
    adj->left -= (2.0 * scale / n) * d;
    adj->right += (2.0 * scale / n) * d;
  }
  return d.squaredNorm() / n;
}

double xpinn_pair_loss(const EvalBundle& left, const EvalBundle& right, const NondimCoeffs& coeffs,
                       PointAdjoint* adj_left, PointAdjoint* adj_right, double scale) {
  check_lengths(left.u, right.u);
  const double n = static_cast<double>(left.u.size());
  const Eigen::VectorXd r_l = pde_residual(left, coeffs);
  const Eigen::VectorXd r_r = pde_residual(right, coeffs);
  const Eigen::VectorXd dr = r_l - r_r;
  // (uL - avg)^2 + (uR - avg)^2 = (uL - uR)^2 / 2
  const Eigen::VectorXd du = left.u - right.u;
  if (adj_left && adj_right) {
    const Eigen::VectorXd g_r = (2.0 * scale / n) * dr;
    residual_backward(left, coeffs, 0.0, g_r, *adj_left);
    residual_backward(right, coeffs, 0.0, -g_r, *adj_right);
    adj_left->u += (scale / n) * du;
    adj_right->u -= (scale / n) * du;
  }
  return dr.squaredNorm() / n + 0.5 * du.squaredNorm() / n;
}

InterfaceLossResult interface_loss(const Partition& partition, LossBuilder& builder, const InterfaceConfig& cfg,
                                   std::uint64_t seed, std::uint64_t step, double scale) {
  InterfaceLossResult out;
  const auto fd = FundamentalDiagram::normalized();
  const auto& ifaces = partition.interfaces();
  for (std::size_t k = 0; k < ifaces.size(); ++k) {
    const auto& st = ifaces[k];
    const Eigen::VectorXd samples = sample_interface(st, cfg.n_samples, seed, step, k);
    const Eigen::Matrix2Xd pts = interface_points(st, samples);
    const bool spatial = st.orientation == Orientation::spatial;
    auto& ev_l = builder.evaluate(st.left, pts, spatial ? DerivOrder::first : DerivOrder::value);
    auto& ev_r = builder.evaluate(st.right, pts, spatial ? DerivOrder::first : DerivOrder::value);
    const Eigen::Index n = pts.cols();
    double value = 0.0;
    InterfaceKind kind = InterfaceKind::smooth;
    if (!spatial) {
      JumpAdjoint adj(n);
      value = temporal_c0_loss(ev_l.bundle.u, ev_r.bundle.u, &adj, scale);
      ev_l.adjoint.u += adj.left;
      ev_r.adjoint.u += adj.right;
    } else {
      kind = classify(ev_l.bundle.u, ev_r.bundle.u, cfg.delta_shock);
      if (kind == InterfaceKind::shock) {
        const Eigen::VectorXd rho_l = (1.0 - ev_l.bundle.u.array()).matrix();
        const Eigen::VectorXd rho_r = (1.0 - ev_r.bundle.u.array()).matrix();
        JumpAdjoint adj(n);
        value = rh_loss(rho_l, rho_r, st.shock_speed, fd, &adj, scale) +
                cfg.w_entropy * entropy_loss(rho_l, rho_r, st.shock_speed, fd, &adj, scale * cfg.w_entropy);
        // d rho / d u = -1
        ev_l.adjoint.u -= adj.left;
        ev_r.adjoint.u -= adj.right;
        builder.shock_speed_grads().at(k) += adj.shock_speed;
      } else {
        JumpAdjoint values(n), slopes(n);
        value = smooth_loss(ev_l.bundle.u, ev_r.bundle.u, ev_l.bundle.du_dx, ev_r.bundle.du_dx, &values, &slopes, scale);
        ev_l.adjoint.u += values.left;
        ev_r.adjoint.u += values.right;
        ev_l.adjoint.du_dx += slopes.left;
        ev_r.adjoint.du_dx += slopes.right;
      }
    }
    out.per_interface.push_back(value);
    out.kinds.push_back(kind);
    out.value += value;
  }
  return out;
}

double xpinn_interface_loss(const Partition& partition, LossBuilder& builder, const NondimCoeffs& coeffs,
                            int n_samples, std::uint64_t seed, std::uint64_t step, double scale) {
  double total = 0.0;
  const auto& ifaces = partition.interfaces();
  for (std::size_t k = 0; k < ifaces.size(); ++k) {
    const auto& st = ifaces[k];
    const Eigen::Matrix2Xd pts = interface_points(st, sample_interface(st, n_samples, seed, step, k));
    auto& ev_l = builder.evaluate(st.left, pts, DerivOrder::first);
    auto& ev_r = builder.evaluate(st.right, pts, DerivOrder::first);
    total += xpinn_pair_loss(ev_l.bundle, ev_r.bundle, coeffs, &ev_l.adjoint, &ev_r.adjoint, scale);
  }
  return total;
}

InterfaceLossResult interface_loss(const Partition& partition, const InterfaceConfig& cfg, std::uint64_t seed,
                                   std::uint64_t step) {
  std::vector<const PinnNetwork*> nets;
  for (const auto& n : partition.nets()) nets.push_back(&n);
  LossBuilder builder(nets, partition.interfaces().size());
  return interface_loss(partition, builder, cfg, seed, step);
}

}  // namespace addpinn
