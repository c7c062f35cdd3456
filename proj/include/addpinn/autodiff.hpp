#pragma once

#include "addpinn/network.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace addpinn {

/// How many input derivatives a forward pass carries.
enum class DerivOrder { value, first, second };

/// Network output and exact input derivatives per evaluation point.
struct EvalBundle {
  Eigen::VectorXd u;
  Eigen::VectorXd du_dx;
  Eigen::VectorXd du_dt;
  Eigen::VectorXd d2u_dx2;  // empty unless second order was requested

  Eigen::Index size() const { return u.size(); }
  bool has_first() const { return du_dx.size() == u.size(); }
  bool has_second() const { return d2u_dx2.size() == u.size() && u.size() > 0; }
};

/// Adjoints dL/d(u, u_x, u_t, u_xx) per point; the seeds for reverse accumulation.
struct PointAdjoint {
  Eigen::VectorXd u;
  Eigen::VectorXd du_dx;
  Eigen::VectorXd du_dt;
  Eigen::VectorXd d2u_dx2;

  void resize(Eigen::Index n, DerivOrder order);
};

/// Parameter-shaped gradient for one network (the Fourier matrix has no entry).
struct GradientSet {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static GradientSet zeros_like(const PinnNetwork& net);
  double squared_norm() const;
  void scale(double factor);
  void add_scaled(const GradientSet& other, double factor);
  bool all_finite() const;
};

/// Gradients of a multi-network objective: one GradientSet per network plus one scalar per shock speed.
struct ModelGradients {
  std::vector<GradientSet> nets;
  std::vector<double> shock_speeds;

  double squared_norm() const;
  void scale(double factor);
};

/// Recorded forward pass with forward-mode input tangents; replayed in reverse for parameter gradients.
class ForwardTape {
public:
  ForwardTape(const PinnNetwork& net, Eigen::Matrix2Xd points, DerivOrder order);

  EvalBundle bundle() const;
  DerivOrder order() const { return order_; }
  const Eigen::Matrix2Xd& points() const { return points_; }
  Eigen::Index size() const { return points_.cols(); }

  /// Accumulates into grads the parameter gradient of sum_i adj(i) . (u, u_x, u_t, u_xx)(i).
  void backward(const PointAdjoint& adj, GradientSet& grads) const;

private:
  struct Layer {
    Eigen::MatrixXd h, hx, ht, hxx;  // layer inputs and their tangents
    Eigen::MatrixXd a, ax, at, axx;  // pre-activation and tangents (a holds tanh(a) for hidden layers)
  };

  const PinnNetwork* net_;
  Eigen::Matrix2Xd points_;
  DerivOrder order_;
  std::vector<Layer> layers_;
  Eigen::MatrixXd out_u_, out_x_, out_t_, out_xx_;
};

EvalBundle eval_with_input_derivs(const PinnNetwork& net, const Eigen::Matrix2Xd& points, bool want_second);

/// Collects network evaluations made while building a scalar objective so their adjoints can be
/// propagated back after the loss value is known.
class LossBuilder {
public:
  struct Evaluation {
    std::size_t net_index;
    ForwardTape tape;
    EvalBundle bundle;
    PointAdjoint adjoint;
  };

  LossBuilder(std::span<const PinnNetwork* const> nets, std::size_t n_shock_speeds);

  /// Evaluates network `net_index` and returns a handle whose adjoint the caller fills in.
  Evaluation& evaluate(std::size_t net_index, const Eigen::Matrix2Xd& points, DerivOrder order);

  std::vector<double>& shock_speed_grads() { return shock_grads_; }
  std::size_t n_nets() const { return nets_.size(); }
  const PinnNetwork& net(std::size_t i) const { return *nets_[i]; }

  ModelGradients backpropagate() const;

private:
  std::vector<const PinnNetwork*> nets_;
  std::vector<std::unique_ptr<Evaluation>> evals_;
  std::vector<double> shock_grads_;
};

struct LossAndGradients {
  double loss = 0.0;
  ModelGradients grads;
};

/// Runs `objective` (which returns the loss and fills adjoints through the builder),
/// rejects non-finite losses, then reverse-accumulates all parameter and shock-speed gradients.
LossAndGradients loss_gradients(std::span<const PinnNetwork* const> nets, std::size_t n_shock_speeds,
                                const std::function<double(LossBuilder&)>& objective);

}  // namespace addpinn
