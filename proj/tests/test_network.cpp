#include "addpinn/network.hpp"
#include "addpinn/partition.hpp"
#include "addpinn/sampling.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace addpinn;

TEST_CASE("parent embedding has 256 components") {
  const PinnNetwork net = init_network(Architecture::parent(), 1);
  CHECK(net.fourier.rows() == 128);
  CHECK(embed(net, 0.3, 0.4).size() == 256);
}

TEST_CASE("initialization is deterministic in the seed") {
  const Architecture arch{{2, 16, 8, 1}, 10.0};
  const PinnNetwork a = init_network(arch, 7), b = init_network(arch, 7), c = init_network(arch, 8);
  CHECK(a.fourier == b.fourier);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l] == b.biases[l]);
  }
  CHECK(a.fourier != c.fourier);
  CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("embedding with zero frequencies and periodicity") {
  PinnNetwork net = init_network(Architecture{{2, 16, 8, 1}, 10.0}, 3);
  const Eigen::VectorXd e = embed(net, 0.2, 0.9);
  CHECK(e.cwiseAbs().maxCoeff() <= 1.0);
  const int de = net.arch.embed_dim();
  for (int k = 0; k < de; ++k) {
    const Eigen::Vector2d w = net.fourier.row(k).transpose();
    const Eigen::Vector2d shift = 2.0 * std::numbers::pi * w / w.squaredNorm();
    const Eigen::VectorXd moved = embed(net, 0.2 + shift(0), 0.9 + shift(1));
    CHECK(moved(k) == doctest::Approx(e(k)).epsilon(1e-9));
    CHECK(moved(k + de) == doctest::Approx(e(k + de)).epsilon(1e-9));
  }
  net.fourier.setZero();
  const Eigen::VectorXd z = embed(net, 0.2, 0.9);
  CHECK(z.head(de).cwiseAbs().maxCoeff() == 0.0);
  CHECK((z.tail(de).array() == 1.0).all());
}

TEST_CASE("batch forward equals pointwise forward") {
  const PinnNetwork net = init_network(Architecture{{2, 16, 8, 8, 1}, 10.0}, 4);
  const Eigen::Matrix2Xd pts = uniform_points(50, Box{}, 5);
  const Eigen::VectorXd batch = forward(net, pts);
  for (Eigen::Index i = 0; i < pts.cols(); ++i)
    CHECK(std::abs(batch(i) - forward(net, pts(0, i), pts(1, i))) <= 1e-12);
}

TEST_CASE("zero readout gives zero output") {
  PinnNetwork net = init_network(Architecture{{2, 16, 8, 1}, 10.0}, 4);
  net.weights.back().setZero();
  net.biases.back().setZero();
  CHECK(forward(net, uniform_points(20, Box{}, 1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tanh through the exponential matches std::tanh") {
  Eigen::ArrayXd a = Eigen::ArrayXd::LinSpaced(2001, -40.0, 40.0);
  Eigen::ArrayXd ref = a.unaryExpr([](double v) { return std::tanh(v); });
  tanh_inplace(a);
  CHECK((a - ref).abs().maxCoeff() <= 1e-15);
}

TEST_CASE("warm start copies compatible layers") {
  const PinnNetwork parent = init_network(Architecture{{2, 16, 8, 8, 8, 1}, 10.0}, 1);
  const PinnNetwork same = warm_start_copy(parent, parent.arch, 2);
  CHECK(forward(same, 0.3, 0.6) == forward(parent, 0.3, 0.6));
  const PinnNetwork child = warm_start_copy(parent, Architecture{{2, 16, 8, 8, 1}, 10.0}, 2);
  CHECK(child.fourier == parent.fourier);
  CHECK(child.weights[0] == parent.weights[0]);
  CHECK(child.weights[1] == parent.weights[1]);
  CHECK(child.weights.back() == parent.weights.back());
}

TEST_CASE("network JSON round trip") {
  const PinnNetwork net = init_network(Architecture{{2, 8, 4, 1}, 10.0}, 6);
  const PinnNetwork back = network_from_json(network_to_json(net));
  CHECK(back.arch == net.arch);
  CHECK(forward(back, 0.1, 0.2) == forward(net, 0.1, 0.2));
}

TEST_CASE("piecewise prediction") {
  const Architecture arch{{2, 8, 4, 1}, 10.0};
  const PinnNetwork a = init_network(arch, 1), b = init_network(arch, 2);
  const Partition single = Partition::single(a);
  CHECK(piecewise_predict(single, 0.4, 0.3) == forward(a, 0.4, 0.3));

  const Partition same = Partition::grid(Direction::spatial, {0.5}, {}, {a, a});
  CHECK(piecewise_predict(same, 0.5 - 1e-12, 0.3) == doctest::Approx(piecewise_predict(same, 0.5, 0.3)));

  const Partition two = Partition::grid(Direction::spatial, {0.5}, {}, {a, b});
  CHECK(two.locate(0.5, 0.3) == 1);
  CHECK(two.locate(1.0, 1.0) == 1);
  CHECK(two.locate(0.0, 0.0) == 0);
  CHECK(piecewise_predict(two, 0.5, 0.3) == forward(b, 0.5, 0.3));
  CHECK(piecewise_predict(two, 0.2, 0.3) == forward(a, 0.2, 0.3));
  CHECK(two.interfaces().size() == 1);
  CHECK(two.interfaces()[0].shock_speed == 0.0);

  const Partition back = partition_from_json(partition_to_json(two));
  CHECK(back.x_splits() == two.x_splits());
  CHECK(piecewise_predict(back, 0.7, 0.1) == piecewise_predict(two, 0.7, 0.1));
}
