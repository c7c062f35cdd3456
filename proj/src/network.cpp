#include "addpinn/network.hpp"

#include "json.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace addpinn {

namespace {

constexpr int kCheckpointVersion = 1;

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  const auto n_cols = n_rows ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Eigen::MatrixXd m(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const auto& row = rows.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != n_cols) throw std::runtime_error("checkpoint: ragged matrix");
    for (Eigen::Index c = 0; c < n_cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::size_t Architecture::trainable_count() const {
  std::size_t total = 0;
  for (int l = 0; l < n_layers(); ++l)
    total += static_cast<std::size_t>(layer_out(l)) * (static_cast<std::size_t>(layer_in(l)) + 1);
  return total;
}

void Architecture::validate() const {
  if (widths.size() < 3) throw std::invalid_argument("architecture needs at least one hidden layer");
  if (widths.front() != 2) throw std::invalid_argument("architecture input width must be 2");
  if (widths.back() != 1) throw std::invalid_argument("architecture output width must be 1");
  if (widths[1] < 2 || widths[1] % 2 != 0) throw std::invalid_argument("first hidden width must be even");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("architecture widths must be positive");
  if (!(fourier_sigma > 0.0)) throw std::invalid_argument("fourier sigma must be positive");
}

PinnNetwork init_network(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  PinnNetwork net;
  net.arch = arch;
  net.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, arch.fourier_sigma);
  net.fourier.resize(arch.embed_dim(), 2);
  for (Eigen::Index r = 0; r < net.fourier.rows(); ++r)
    for (Eigen::Index c = 0; c < 2; ++c) net.fourier(r, c) = normal(rng);

  // Fan-in scaled uniform, the usual default for dense layers feeding tanh.
  for (int l = 0; l < arch.n_layers(); ++l) {
    const int in = arch.layer_in(l);
    const int out = arch.layer_out(l);
    std::uniform_real_distribution<double> uni(-1.0 / std::sqrt(in), 1.0 / std::sqrt(in));
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uni(rng);
    Eigen::VectorXd b(out);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = uni(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

Eigen::VectorXd embed(const PinnNetwork& net, double x, double t) {
  const Eigen::VectorXd z = net.fourier * Eigen::Vector2d(x, t);
  Eigen::VectorXd out(2 * z.size());
  out.head(z.size()) = z.array().sin();
  out.tail(z.size()) = z.array().cos();
  return out;
}

Eigen::VectorXd forward(const PinnNetwork& net, const Eigen::Matrix2Xd& points) {
  const Eigen::MatrixXd z = net.fourier * points;
  Eigen::MatrixXd h(2 * z.rows(), z.cols());
  h.topRows(z.rows()) = z.array().sin();
  h.bottomRows(z.rows()) = z.array().cos();
  const int n_layers = net.arch.n_layers();
  for (int l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd a = net.weights[static_cast<std::size_t>(l)] * h;
    a.colwise() += net.biases[static_cast<std::size_t>(l)];
    if (l + 1 < n_layers) tanh_inplace(a);
    h = std::move(a);
  }
  return h.row(0).transpose();
}

double forward(const PinnNetwork& net, double x, double t) {
  Eigen::Matrix2Xd p(2, 1);
  p << x, t;
  return forward(net, p)(0);
}

PinnNetwork warm_start_copy(const PinnNetwork& parent, const Architecture& child_arch, std::uint64_t seed) {
  PinnNetwork child = init_network(child_arch, seed);
  if (child.fourier.rows() == parent.fourier.rows()) child.fourier = parent.fourier;
  const int n_child = child_arch.n_layers();
  const int n_parent = parent.arch.n_layers();
  auto copy_if_compatible = [&](int child_layer, int parent_layer) {
    const auto c = static_cast<std::size_t>(child_layer);
    const auto p = static_cast<std::size_t>(parent_layer);
    if (child.weights[c].rows() == parent.weights[p].rows() && child.weights[c].cols() == parent.weights[p].cols()) {
      child.weights[c] = parent.weights[p];
      child.biases[c] = parent.biases[p];
    }
  };
  for (int l = 0; l + 1 < n_child && l + 1 < n_parent; ++l) copy_if_compatible(l, l);
  copy_if_compatible(n_child - 1, n_parent - 1);
  return child;
}

std::string network_to_json(const PinnNetwork& net) {
  nlohmann::json j;
  j["format"] = "addpinn-network";
  j["version"] = kCheckpointVersion;
  j["arch"] = {{"widths", net.arch.widths}, {"fourier_sigma", net.arch.fourier_sigma}};
  j["seed"] = net.seed;
  j["fourier"] = matrix_to_json(net.fourier);
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    weights.push_back(matrix_to_json(net.weights[l]));
    biases.push_back(std::vector<double>(net.biases[l].data(), net.biases[l].data() + net.biases[l].size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump();
}

PinnNetwork network_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("format", "") != "addpinn-network") throw std::runtime_error("checkpoint: not a network file");
  if (j.value("version", 0) != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
  PinnNetwork net;
  net.arch.widths = j.at("arch").at("widths").get<std::vector<int>>();
  net.arch.fourier_sigma = j.at("arch").at("fourier_sigma").get<double>();
  net.arch.validate();
  net.seed = j.at("seed").get<std::uint64_t>();
  net.fourier = matrix_from_json(j.at("fourier"));
  if (net.fourier.rows() != net.arch.embed_dim() || net.fourier.cols() != 2)
    throw std::runtime_error("checkpoint: Fourier matrix does not match architecture");
  for (int l = 0; l < net.arch.n_layers(); ++l) {
    Eigen::MatrixXd w = matrix_from_json(j.at("weights").at(static_cast<std::size_t>(l)));
    const auto b = j.at("biases").at(static_cast<std::size_t>(l)).get<std::vector<double>>();
    if (w.rows() != net.arch.layer_out(l) || w.cols() != net.arch.layer_in(l) ||
        static_cast<int>(b.size()) != net.arch.layer_out(l))
      throw std::runtime_error("checkpoint: layer " + std::to_string(l) + " does not match architecture");
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  }
  return net;
}

}  // namespace addpinn
