#include "addpinn/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace addpinn {

void PointAdjoint::resize(Eigen::Index n, DerivOrder order) {
  u = Eigen::VectorXd::Zero(n);
  if (order != DerivOrder::value) {
    du_dx = Eigen::VectorXd::Zero(n);
    du_dt = Eigen::VectorXd::Zero(n);
  }
  if (order == DerivOrder::second) d2u_dx2 = Eigen::VectorXd::Zero(n);
}

GradientSet GradientSet::zeros_like(const PinnNetwork& net) {
  GradientSet g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return g;
}

double GradientSet::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

void GradientSet::scale(double factor) {
  for (auto& w : weights) w *= factor;
  for (auto& b : biases) b *= factor;
}

void GradientSet::add_scaled(const GradientSet& other, double factor) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += factor * other.weights[l];
    biases[l] += factor * other.biases[l];
  }
}

bool GradientSet::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

double ModelGradients::squared_norm() const {
  double s = 0.0;
  for (const auto& g : nets) s += g.squared_norm();
  for (double v : shock_speeds) s += v * v;
  return s;
}

void ModelGradients::scale(double factor) {
  for (auto& g : nets) g.scale(factor);
  for (double& v : shock_speeds) v *= factor;
}

ForwardTape::ForwardTape(const PinnNetwork& net, Eigen::Matrix2Xd points, DerivOrder order)
    : net_(&net), points_(std::move(points)), order_(order) {
  const bool first = order != DerivOrder::value;
  const bool second = order == DerivOrder::second;
  const Eigen::Index n = points_.cols();
  const Eigen::Index de = net.fourier.rows();

  const Eigen::ArrayXXd z = (net.fourier * points_).array();
  const Eigen::ArrayXXd sz = z.sin();
  const Eigen::ArrayXXd cz = z.cos();

  Layer first_layer;
  first_layer.h.resize(2 * de, n);
  first_layer.h.topRows(de) = sz.matrix();
  first_layer.h.bottomRows(de) = cz.matrix();
  if (first) {
    const Eigen::ArrayXd wx = net.fourier.col(0).array();
    const Eigen::ArrayXd wt = net.fourier.col(1).array();
    first_layer.hx.resize(2 * de, n);
    first_layer.hx.topRows(de) = (cz.colwise() * wx).matrix();
    first_layer.hx.bottomRows(de) = (-(sz.colwise() * wx)).matrix();
    first_layer.ht.resize(2 * de, n);
    first_layer.ht.topRows(de) = (cz.colwise() * wt).matrix();
    first_layer.ht.bottomRows(de) = (-(sz.colwise() * wt)).matrix();
    if (second) {
      const Eigen::ArrayXd wx2 = wx.square();
      first_layer.hxx.resize(2 * de, n);
      first_layer.hxx.topRows(de) = (-(sz.colwise() * wx2)).matrix();
      first_layer.hxx.bottomRows(de) = (-(cz.colwise() * wx2)).matrix();
    }
  }

  const int n_layers = net.arch.n_layers();
  layers_.reserve(static_cast<std::size_t>(n_layers));
  layers_.push_back(std::move(first_layer));
  for (int l = 0; l < n_layers; ++l) {
    auto& layer = layers_.back();
    const auto& w = net.weights[static_cast<std::size_t>(l)];
    layer.a = w * layer.h;
    layer.a.colwise() += net.biases[static_cast<std::size_t>(l)];
    if (first) {
      layer.ax = w * layer.hx;
      layer.at = w * layer.ht;
      if (second) layer.axx = w * layer.hxx;
    }
    if (l + 1 == n_layers) {
      out_u_ = layer.a;
      if (first) {
        out_x_ = layer.ax;
        out_t_ = layer.at;
        if (second) out_xx_ = layer.axx;
      }
      break;
    }
    tanh_inplace(layer.a);
    Layer next;
    next.h = layer.a;
    if (first) {
      const Eigen::ArrayXXd s1 = 1.0 - layer.a.array().square();
      next.hx = (s1 * layer.ax.array()).matrix();
      next.ht = (s1 * layer.at.array()).matrix();
      if (second) {
        const Eigen::ArrayXXd s2 = -2.0 * layer.a.array() * s1;
        next.hxx = (s1 * layer.axx.array() + s2 * layer.ax.array().square()).matrix();
      }
    }
    layers_.push_back(std::move(next));
  }
}

EvalBundle ForwardTape::bundle() const {
  EvalBundle b;
  b.u = out_u_.row(0).transpose();
  if (order_ != DerivOrder::value) {
    b.du_dx = out_x_.row(0).transpose();
    b.du_dt = out_t_.row(0).transpose();
  }
  if (order_ == DerivOrder::second) b.d2u_dx2 = out_xx_.row(0).transpose();
  return b;
}

void ForwardTape::backward(const PointAdjoint& adj, GradientSet& grads) const {
  const Eigen::Index n = size();
  const bool need_xx = adj.d2u_dx2.size() > 0;
  const bool need_x = adj.du_dx.size() > 0 || need_xx;
  const bool need_t = adj.du_dt.size() > 0;
  if (adj.u.size() != n) throw std::invalid_argument("backward: adjoint length mismatch");
  if ((need_x || need_t) && order_ == DerivOrder::value)
    throw std::invalid_argument("backward: derivative adjoints on a value-only tape");
  if (need_xx && order_ != DerivOrder::second)
    throw std::invalid_argument("backward: second-derivative adjoint on a first-order tape");

  Eigen::MatrixXd g_a = adj.u.transpose();
  Eigen::MatrixXd g_ax, g_at, g_axx;
  if (need_x) g_ax = adj.du_dx.size() ? Eigen::MatrixXd(adj.du_dx.transpose()) : Eigen::MatrixXd::Zero(1, n);
  if (need_t) g_at = adj.du_dt.transpose();
  if (need_xx) g_axx = adj.d2u_dx2.transpose();

  const int n_layers = net_->arch.n_layers();
  for (int l = n_layers - 1; l >= 0; --l) {
    const auto& layer = layers_[static_cast<std::size_t>(l)];
    const auto li = static_cast<std::size_t>(l);
    auto& gw = grads.weights[li];
    gw.noalias() += g_a * layer.h.transpose();
    if (need_x) gw.noalias() += g_ax * layer.hx.transpose();
    if (need_t) gw.noalias() += g_at * layer.ht.transpose();
    if (need_xx) gw.noalias() += g_axx * layer.hxx.transpose();
    grads.biases[li] += g_a.rowwise().sum();
    if (l == 0) break;

    // Adjoints of the previous layer's outputs g = tanh(a_prev) and tangents.
    const auto& w = net_->weights[li];
    const Eigen::MatrixXd g_g = w.transpose() * g_a;
    Eigen::MatrixXd g_gx, g_gt, g_gxx;
    if (need_x) g_gx = w.transpose() * g_ax;
    if (need_t) g_gt = w.transpose() * g_at;
    if (need_xx) g_gxx = w.transpose() * g_axx;

    const auto& prev = layers_[li - 1];
    const Eigen::ArrayXXd g = prev.a.array();
    const Eigen::ArrayXXd s1 = 1.0 - g.square();
    Eigen::ArrayXXd g_s1 = Eigen::ArrayXXd::Zero(g.rows(), n);
    Eigen::ArrayXXd g_total = g_g.array();

    Eigen::MatrixXd new_ax, new_at, new_axx;
    if (need_x) {
      Eigen::ArrayXXd ax_adj = s1 * g_gx.array();
      g_s1 += prev.ax.array() * g_gx.array();
      if (need_xx) {
        const Eigen::ArrayXXd s2 = -2.0 * g * s1;
        const Eigen::ArrayXXd ax = prev.ax.array();
        ax_adj += 2.0 * s2 * ax * g_gxx.array();
        new_axx = (s1 * g_gxx.array()).matrix();
        g_s1 += prev.axx.array() * g_gxx.array();
        const Eigen::ArrayXXd g_s2 = ax.square() * g_gxx.array();
        // s2 = -2 g s1
        g_s1 += -2.0 * g * g_s2;
        g_total += -2.0 * s1 * g_s2;
      }
      new_ax = ax_adj.matrix();
    }
    if (need_t) {
      new_at = (s1 * g_gt.array()).matrix();
      g_s1 += prev.at.array() * g_gt.array();
    }
    g_total += -2.0 * g * g_s1;  // s1 = 1 - g^2
    g_a = (s1 * g_total).matrix();
    g_ax = std::move(new_ax);
    g_at = std::move(new_at);
    g_axx = std::move(new_axx);
  }
}

EvalBundle eval_with_input_derivs(const PinnNetwork& net, const Eigen::Matrix2Xd& points, bool want_second) {
  return ForwardTape(net, points, want_second ? DerivOrder::second : DerivOrder::first).bundle();
}

LossBuilder::LossBuilder(std::span<const PinnNetwork* const> nets, std::size_t n_shock_speeds)
    : nets_(nets.begin(), nets.end()), shock_grads_(n_shock_speeds, 0.0) {}

LossBuilder::Evaluation& LossBuilder::evaluate(std::size_t net_index, const Eigen::Matrix2Xd& points,
                                               DerivOrder order) {
  if (net_index >= nets_.size()) throw std::out_of_range("LossBuilder: bad network index");
  auto eval = std::make_unique<Evaluation>(Evaluation{net_index, ForwardTape(*nets_[net_index], points, order), {}, {}});
  eval->bundle = eval->tape.bundle();
  eval->adjoint.resize(points.cols(), order);
  evals_.push_back(std::move(eval));
  return *evals_.back();
}

ModelGradients LossBuilder::backpropagate() const {
  ModelGradients out;
  for (const auto* net : nets_) out.nets.push_back(GradientSet::zeros_like(*net));
  for (const auto& e : evals_) {
    PointAdjoint adj = e->adjoint;
    // Drop all-zero tangent adjoints so the reverse pass skips unused tangent paths.
    if (adj.d2u_dx2.size() && adj.d2u_dx2.isZero(0.0)) adj.d2u_dx2.resize(0);
    if (adj.du_dx.size() && adj.du_dx.isZero(0.0)) adj.du_dx.resize(0);
    if (adj.du_dt.size() && adj.du_dt.isZero(0.0)) adj.du_dt.resize(0);
    e->tape.backward(adj, out.nets[e->net_index]);
  }
  out.shock_speeds = shock_grads_;
  return out;
}

LossAndGradients loss_gradients(std::span<const PinnNetwork* const> nets, std::size_t n_shock_speeds,
                                const std::function<double(LossBuilder&)>& objective) {
  LossBuilder builder(nets, n_shock_speeds);
  LossAndGradients result;
  result.loss = objective(builder);
  if (!std::isfinite(result.loss)) throw std::runtime_error("loss_gradients: non-finite loss");
  result.grads = builder.backpropagate();
  return result;
}

}  // namespace addpinn
