#include "addpinn/losses.hpp"

#include <doctest.h>

#include <cmath>

using namespace addpinn;

namespace {

EvalBundle bundle_of(std::initializer_list<double> u, std::initializer_list<double> ux, std::initializer_list<double> ut,
                     std::initializer_list<double> uxx = {}) {
  EvalBundle b;
  b.u = Eigen::Map<const Eigen::VectorXd>(u.begin(), static_cast<Eigen::Index>(u.size()));
  b.du_dx = Eigen::Map<const Eigen::VectorXd>(ux.begin(), static_cast<Eigen::Index>(ux.size()));
  b.du_dt = Eigen::Map<const Eigen::VectorXd>(ut.begin(), static_cast<Eigen::Index>(ut.size()));
  if (uxx.size()) b.d2u_dx2 = Eigen::Map<const Eigen::VectorXd>(uxx.begin(), static_cast<Eigen::Index>(uxx.size()));
  return b;
}

}  // namespace

TEST_CASE("data loss") {
  Eigen::VectorXd p(2), o(2);
  p << 0, 1;
  o << 0, 0;
  CHECK(data_loss(p, o) == 0.5);
  CHECK(data_loss(o, o) == 0.0);
  Eigen::VectorXd p2(2), o2(2);
  p2 << 1, 0;
  CHECK(data_loss(p2, o2) == data_loss(p, o));
  Eigen::VectorXd d = Eigen::VectorXd::Zero(2);
  data_loss(p, o, &d, 2.0);
  CHECK(d(1) == 2.0);
}

TEST_CASE("residual arithmetic") {
  const NondimCoeffs c{2.0, 1.0, 1.0};
  const Eigen::VectorXd r = pde_residual(bundle_of({0.5}, {1.0}, {0.0}), c);
  CHECK(std::abs(r(0) - 1.5 / std::sqrt(6.0)) <= 1e-12);
  CHECK(pde_residual(bundle_of({0.3}, {0.0}, {0.0}), c)(0) == 0.0);
}

TEST_CASE("viscosity residual") {
  const NondimCoeffs c{2.0, 1.0, 1.0};
  const EvalBundle b = bundle_of({0.25}, {1.0}, {0.2}, {2.0});
  CHECK(viscosity_residual(b, c, 0.0)(0) == pde_residual(b, c)(0));
  CHECK(std::abs(viscosity_residual(b, c, 0.1)(0) - pde_residual(b, c)(0) - 0.1 * 2.0 / std::sqrt(6.0)) <= 1e-15);
  CHECK(viscosity_residual(bundle_of({0.4}, {0.0}, {0.0}, {0.0}), c, 0.1)(0) == 0.0);
}

TEST_CASE("residual backward matches the linearization") {
  const NondimCoeffs c{1.3, 0.6, 1.0};
  const EvalBundle b = bundle_of({0.3, 0.8}, {0.5, -1.0}, {0.1, 0.4}, {2.0, -3.0});
  PointAdjoint adj;
  adj.resize(2, DerivOrder::second);
  Eigen::VectorXd dr(2);
  dr << 1.0, 1.0;
  residual_backward(b, c, 0.1, dr, adj);
  const double n = c.norm();
  for (int i = 0; i < 2; ++i) {
    CHECK(adj.u(i) == doctest::Approx(-c.B * b.du_dx(i) / n));
    CHECK(adj.du_dx(i) == doctest::Approx((c.A - c.B * b.u(i)) / n));
    CHECK(adj.du_dt(i) == doctest::Approx(-1.0 / n));
    CHECK(adj.d2u_dx2(i) == doctest::Approx(0.1 / n));
  }
}

TEST_CASE("causal weights") {
  const std::vector<double> two{1.0, 1.0};
  const auto w = causal_weights(two, 1.0);
  CHECK(w[0] == 1.0);
  CHECK(std::abs(w[1] - std::exp(-1.0)) <= 1e-12);
  const auto z = causal_weights(std::vector<double>{0, 0, 0, 0}, 1.0);
  for (double v : z) CHECK(v == 1.0);
}

TEST_CASE("time bins are balanced and ordered") {
  const std::vector<double> t{0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8};
  const auto bins = assign_time_bins(t, 3);
  CHECK(bins == std::vector<int>{2, 0, 1, 0, 1, 0, 2});
  const auto bm = bin_mean_squares(std::vector<double>{1, 2, 3, 4, 5, 6, 7}, bins, 3);
  CHECK(bm[0] == doctest::Approx((4 + 16 + 36) / 3.0));
  CHECK(bm[1] == doctest::Approx((9 + 25) / 2.0));
}

TEST_CASE("PDE loss averages subdomains") {
  std::vector<ResidualBatch> zero{{Eigen::VectorXd::Zero(3), {}}};
  CHECK(pde_loss(zero) == 0.0);
  std::vector<ResidualBatch> ones{{Eigen::VectorXd::Ones(2), {}}};
  CHECK(pde_loss(ones) == 1.0);
  std::vector<ResidualBatch> two{{Eigen::VectorXd::Zero(2), {}}, {Eigen::VectorXd::Constant(2, std::sqrt(2.0)), {}}};
  CHECK(pde_loss(two) == doctest::Approx(1.0));
  std::vector<ResidualBatch> weighted{{Eigen::VectorXd::Ones(2), Eigen::Vector2d(1.0, 0.0)}};
  CHECK(pde_loss(weighted) == doctest::Approx(0.5));
}

TEST_CASE("total loss") {
  const LossWeights w;
  CHECK(total_loss({1, 1, 1}, w) == doctest::Approx(1.0));
  CHECK(total_loss({2, 4, 0}, w) == doctest::Approx(0.85 * 2 + 0.05 * 4));
  CHECK(total_loss({0, 0, 0}, w) == 0.0);
}
