#include "support.hpp"

#include "addpinn/interfaces.hpp"
#include "addpinn/partition.hpp"

#include <doctest.h>

#include <cmath>

using namespace addpinn;
using namespace testing_support;

namespace {

PinnNetwork constant_net(double c, std::uint64_t seed = 1) {
  PinnNetwork net = small_net(seed);
  net.weights.back().setZero();
  net.biases.back()(0) = c;
  return net;
}

const auto kFd = FundamentalDiagram::normalized();

}  // namespace

TEST_CASE("interface samples") {
  InterfaceState st;
  const Eigen::VectorXd a = sample_interface(st, 200, 5, 10);
  CHECK(a.size() == 200);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() <= 1.0);
  CHECK(a == sample_interface(st, 200, 5, 10));
  CHECK(a != sample_interface(st, 200, 5, 11));
}

TEST_CASE("classification is strict") {
  const Eigen::VectorXd same = Eigen::VectorXd::Constant(4, 0.5);
  CHECK(classify(same, same, 0.1) == InterfaceKind::smooth);
  CHECK(classify(Eigen::VectorXd::Constant(4, 0.8), Eigen::VectorXd::Constant(4, 0.2), 0.1) == InterfaceKind::shock);
  CHECK(classify(Eigen::VectorXd::Constant(4, 0.5), Eigen::VectorXd::Constant(4, 0.25), 0.25) == InterfaceKind::smooth);
}

TEST_CASE("smooth loss") {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  CHECK(smooth_loss(x, x, x, x) == 0.0);
  // u_L = x and u_R = 2x - x_int meet at x_int with slopes 1 and 2.
  const double x_int = 0.4;
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(5, x_int);
  CHECK(smooth_loss(u, (2.0 * u.array() - x_int).matrix(), Eigen::VectorXd::Ones(5), Eigen::VectorXd::Constant(5, 2.0)) ==
        1.0);
}

TEST_CASE("Rankine-Hugoniot loss") {
  const Eigen::VectorXd l = Eigen::VectorXd::Constant(3, 0.1), r = Eigen::VectorXd::Constant(3, 0.7);
  CHECK(std::abs(rh_loss(l, r, 0.2, kFd)) <= 1e-12);
  CHECK(std::abs(rh_loss(l, r, 0.0, kFd) - 0.0144) <= 1e-12);
  CHECK(rh_loss(l, l, 3.0, kFd) == 0.0);
}

TEST_CASE("RH loss is a quadratic in s minimized at the analytic speed") {
  const Eigen::VectorXd l = Eigen::VectorXd::Constant(3, 0.1), r = Eigen::VectorXd::Constant(3, 0.7);
  double s = 0.0, prev = rh_loss(l, r, s, kFd);
  for (int i = 0; i < 200; ++i) {
    JumpAdjoint adj(3);
    rh_loss(l, r, s, kFd, &adj);
    s -= 1.0 * adj.shock_speed;
    const double now = rh_loss(l, r, s, kFd);
    CHECK(now <= prev);
    prev = now;
  }
  CHECK(s == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("entropy loss") {
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(2, 0.1), hi = Eigen::VectorXd::Constant(2, 0.7);
  CHECK(entropy_loss(lo, hi, 0.2, kFd) == 0.0);
  CHECK(std::abs(entropy_loss(hi, lo, 0.2, kFd) - 0.72) <= 1e-12);
  CHECK(entropy_loss(lo, hi, characteristic_speed(kFd, 0.1), kFd) == 0.0);
  CHECK(entropy_loss(lo, hi, 0.9, kFd) > 0.0);
  CHECK(entropy_loss(lo, hi, -0.5, kFd) > 0.0);
}

TEST_CASE("temporal C0 loss") {
  const Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(4, 0.0, 1.0);
  CHECK(temporal_c0_loss(a, a) == 0.0);
  CHECK(temporal_c0_loss(a, (a.array() + 0.3).matrix()) == doctest::Approx(0.09));
}

TEST_CASE("interface loss on partitions") {
  const InterfaceConfig cfg;
  const PinnNetwork n = small_net(3);
  CHECK(interface_loss(Partition::grid(Direction::spatial, {0.5}, {}, {n, n}), cfg, 1, 1).value == 0.0);

  // u = 1 - rho: states 0.1 | 0.7 at the analytic speed give zero.
  Partition shock = Partition::grid(Direction::spatial, {0.5}, {}, {constant_net(0.9), constant_net(0.3)});
  shock.interfaces()[0].shock_speed = 0.2;
  const auto res = interface_loss(shock, cfg, 1, 1);
  CHECK(res.kinds[0] == InterfaceKind::shock);
  CHECK(std::abs(res.value) <= 1e-12);

  const Partition st = Partition::grid(Direction::spacetime, {0.5}, {0.5},
                                       {small_net(1), small_net(2), small_net(3), small_net(4)});
  const auto all = interface_loss(st, cfg, 7, 2);
  CHECK(all.per_interface.size() == 4);
  double sum = 0.0;
  for (double v : all.per_interface) sum += v;
  CHECK(all.value == doctest::Approx(sum));
  for (const auto& i : st.interfaces())
    if (i.orientation == Orientation::temporal) CHECK(i.shock_speed == 0.0);
}

TEST_CASE("interface loss gradients match central differences") {
  Partition p = Partition::grid(Direction::spatial, {0.5}, {}, {small_net(21), small_net(22)});
  p.nets()[1].biases.back()(0) += 0.5;  // force a shock classification
  p.interfaces()[0].shock_speed = 0.3;
  InterfaceConfig cfg;
  cfg.n_samples = 30;
  auto value = [&](const Partition& q) { return interface_loss(q, cfg, 9, 4).value; };
  std::vector<const PinnNetwork*> nets{&p.nets()[0], &p.nets()[1]};
  auto lg = loss_gradients(nets, 1, [&](LossBuilder& b) { return interface_loss(p, b, cfg, 9, 4).value; });
  const double h = 1e-6;
  for (std::size_t k = 0; k < 2; ++k)
    for (Eigen::Index i = 0; i < 3; ++i) {
      Partition q = p;
      q.nets()[k].weights[1](i, 1) += h;
      const double up = value(q);
      q.nets()[k].weights[1](i, 1) -= 2 * h;
      const double down = value(q);
      CHECK(rel_err(lg.grads.nets[k].weights[1](i, 1), (up - down) / (2 * h)) <= 1e-5);
    }
  Partition q = p;
  q.interfaces()[0].shock_speed += h;
  const double up = value(q);
  q.interfaces()[0].shock_speed -= 2 * h;
  CHECK(rel_err(lg.grads.shock_speeds[0], (up - value(q)) / (2 * h)) <= 1e-5);
}

TEST_CASE("XPINN coupling") {
  const NondimCoeffs c{1.0, 1.0, 1.0};
  const Partition same = Partition::grid(Direction::spacetime, {0.5}, {0.5},
                                         {small_net(1), small_net(1), small_net(1), small_net(1)});
  std::vector<const PinnNetwork*> nets;
  for (const auto& n : same.nets()) nets.push_back(&n);
  auto lg = loss_gradients(nets, 0, [&](LossBuilder& b) { return xpinn_interface_loss(same, b, c, 50, 1, 1); });
  CHECK(lg.loss == 0.0);

  const EvalBundle a = eval_with_input_derivs(constant_net(0.2), uniform_points(10, Box{}, 1), false);
  const EvalBundle b = eval_with_input_derivs(constant_net(0.5), uniform_points(10, Box{}, 1), false);
  CHECK(xpinn_pair_loss(a, b, c) == doctest::Approx(2.0 * 0.15 * 0.15));
}
