#include "support.hpp"

#include "addpinn/autodiff.hpp"
#include "addpinn/network.hpp"

#include <doctest.h>

#include <cmath>

using namespace addpinn;
using namespace testing_support;

TEST_CASE("input derivatives match central differences on random small networks") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const PinnNetwork net = small_net(100 + s);
    const Eigen::Matrix2Xd pts = uniform_points(100, Box{}, 200 + s);
    CHECK(input_derivative_error(net, pts) <= 1e-6);
  }
}

TEST_CASE("single Fourier row through one tanh unit has closed-form derivatives") {
  // u = tanh(sin(w1 x + w2 t))
  PinnNetwork net = init_network(Architecture{{2, 2, 1}, 1.0}, 3);
  const double w1 = 1.7, w2 = -0.6;
  net.fourier << w1, w2;
  net.weights[0] << 1.0, 0.0, 0.0, 0.0;
  net.biases[0].setZero();
  net.weights[1] << 1.0, 0.0;
  net.biases[1].setZero();
  const Eigen::Matrix2Xd pts = uniform_points(20, Box{}, 4);
  const EvalBundle b = eval_with_input_derivs(net, pts, true);
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const double z = w1 * pts(0, i) + w2 * pts(1, i);
    const double th = std::tanh(std::sin(z)), s1 = 1.0 - th * th;
    CHECK(b.u(i) == doctest::Approx(th).epsilon(1e-14));
    CHECK(b.du_dx(i) == doctest::Approx(s1 * std::cos(z) * w1).epsilon(1e-14));
    CHECK(b.du_dt(i) == doctest::Approx(s1 * std::cos(z) * w2).epsilon(1e-14));
    const double cx = std::cos(z) * w1;
    CHECK(b.d2u_dx2(i) == doctest::Approx(-2.0 * th * s1 * cx * cx - s1 * std::sin(z) * w1 * w1).epsilon(1e-13));
  }
}

TEST_CASE("zero final layer gives zero output and derivatives") {
  PinnNetwork net = small_net(9);
  net.weights.back().setZero();
  net.biases.back().setZero();
  const EvalBundle b = eval_with_input_derivs(net, uniform_points(30, Box{}, 1), true);
  CHECK(b.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.du_dx.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.du_dt.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.d2u_dx2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("parameter gradients match central differences") {
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(parameter_gradient_error(small_net(300 + s), 400 + s, 20) <= 1e-5);
}

TEST_CASE("linear readout a*k on a fixed feature k has gradient 2 a k^2") {
  // Zero frequencies and zero first-layer weights pin the hidden unit at k = tanh(b0) = 0.5.
  PinnNetwork net = init_network(Architecture{{2, 2, 1}, 1.0}, 5);
  net.fourier.setZero();
  net.weights[0].setZero();
  net.biases[0] << std::atanh(0.5), 0.0;
  net.weights[1] << 2.0, 0.0;
  net.biases[1].setZero();
  const PinnNetwork* p = &net;
  Eigen::Matrix2Xd pt(2, 1);
  pt << 1.0, 0.0;
  auto lg = loss_gradients(std::span<const PinnNetwork* const>(&p, 1), 0, [&](LossBuilder& b) {
    auto& e = b.evaluate(0, pt, DerivOrder::value);
    return data_loss(e.bundle.u, Eigen::VectorXd::Zero(1), &e.adjoint.u);
  });
  CHECK(lg.loss == doctest::Approx(1.0));
  CHECK(lg.grads.nets[0].weights[1](0, 0) == doctest::Approx(2.0 * 2.0 * 0.25));
  CHECK(lg.grads.nets[0].biases[1](0) == doctest::Approx(2.0 * 1.0));
}

TEST_CASE("identically zero loss yields zero gradients") {
  const PinnNetwork net = small_net(11);
  const PinnNetwork* p = &net;
  auto lg = loss_gradients(std::span<const PinnNetwork* const>(&p, 1), 1, [&](LossBuilder& b) {
    b.evaluate(0, uniform_points(10, Box{}, 2), DerivOrder::first);
    return 0.0;
  });
  CHECK(lg.grads.squared_norm() == 0.0);
}

TEST_CASE("non-finite loss is rejected") {
  const PinnNetwork net = small_net(12);
  const PinnNetwork* p = &net;
  CHECK_THROWS(loss_gradients(std::span<const PinnNetwork* const>(&p, 1), 0,
                              [](LossBuilder&) { return std::nan(""); }));
}
