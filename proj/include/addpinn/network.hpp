#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace addpinn {

/// Layer widths including the raw input (2) and scalar output (1).
/// The Fourier embedding has d_e = widths[1] / 2 rows so its output matches the first hidden width.
struct Architecture {
  std::vector<int> widths;
  double fourier_sigma = 10.0;

  int embed_dim() const { return widths.at(1) / 2; }
  int n_layers() const { return static_cast<int>(widths.size()) - 1; }  // dense layers
  int layer_in(int l) const { return l == 0 ? 2 * embed_dim() : widths[static_cast<std::size_t>(l)]; }
  int layer_out(int l) const { return widths[static_cast<std::size_t>(l) + 1]; }
  std::size_t trainable_count() const;
  void validate() const;

  static Architecture parent() { return {{2, 256, 128, 128, 128, 1}, 10.0}; }
  static Architecture child() { return {{2, 256, 128, 128, 1}, 10.0}; }

  bool operator==(const Architecture&) const = default;
};

/// Fourier-feature MLP. The embedding matrix is fixed at construction and never trained.
struct PinnNetwork {
  Architecture arch;
  Eigen::MatrixX2d fourier;              // d_e x 2
  std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
  std::vector<Eigen::VectorXd> biases;
  std::uint64_t seed = 0;
};

/// Elementwise tanh through the vectorized exponential, 1 - 2 / (exp(2x) + 1).
template <class Derived>
void tanh_inplace(Eigen::DenseBase<Derived>& a) {
  a.derived().array() = 1.0 - 2.0 / ((2.0 * a.derived().array()).exp() + 1.0);
}

PinnNetwork init_network(const Architecture& arch, std::uint64_t seed);

/// gamma(x,t) = [sin(W [x,t]), cos(W [x,t])], length 2*d_e.
Eigen::VectorXd embed(const PinnNetwork& net, double x, double t);

double forward(const PinnNetwork& net, double x, double t);
/// points is 2 x N (row 0 = x, row 1 = t).
Eigen::VectorXd forward(const PinnNetwork& net, const Eigen::Matrix2Xd& points);

/// Copies every layer of `parent` whose shape matches the child layer in the same position,
/// plus the Fourier matrix and output layer when shapes agree.
PinnNetwork warm_start_copy(const PinnNetwork& parent, const Architecture& child_arch, std::uint64_t seed);

std::string network_to_json(const PinnNetwork& net);
PinnNetwork network_from_json(const std::string& text);

}  // namespace addpinn
