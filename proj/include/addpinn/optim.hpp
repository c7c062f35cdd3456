#pragma once

#include "addpinn/autodiff.hpp"
#include "addpinn/network.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace addpinn {

/// A contiguous parameter array and its gradient.
struct ParamBlock {
  double* param;
  const double* grad;
  std::size_t size;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are keyed by block position, so the block list must keep
/// the same layout between steps; rebuild the optimizer when the parameter set changes.
class Adam {
public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<const ParamBlock> blocks, double lr);
  long steps_taken() const { return t_; }

private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Trainable blocks of the given networks (the Fourier matrices are excluded).
std::vector<ParamBlock> param_blocks(std::span<PinnNetwork> nets, const ModelGradients& grads);

/// Rescales the network gradients to max_norm when their global L2 norm exceeds it. Returns the
/// norm before clipping.
double clip_gradients(ModelGradients& grads, double max_norm);

/// base * gamma^floor(epoch / step_size), epoch counted from the schedule's start.
double step_lr(double base, long epoch, long step_size, double gamma);

}  // namespace addpinn
