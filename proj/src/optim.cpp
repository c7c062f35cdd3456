#include "addpinn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace addpinn {

void Adam::step(std::span<const ParamBlock> blocks, double lr) {
  for (const auto& b : blocks)
    for (std::size_t i = 0; i < b.size; ++i)
      if (!std::isfinite(b.grad[i])) throw std::runtime_error("adam: non-finite gradient");
  if (m_.empty()) {
    for (const auto& b : blocks) {
      m_.emplace_back(b.size, 0.0);
      v_.emplace_back(b.size, 0.0);
    }
  }
  if (m_.size() != blocks.size()) throw std::invalid_argument("adam: parameter layout changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (m.size() != b.size) throw std::invalid_argument("adam: block size changed");
    for (std::size_t i = 0; i < b.size; ++i) {
      const double g = b.grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      b.param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
    }
  }
}

std::vector<ParamBlock> param_blocks(std::span<PinnNetwork> nets, const ModelGradients& grads) {
  if (grads.nets.size() != nets.size()) throw std::invalid_argument("param_blocks: gradient/network count mismatch");
  std::vector<ParamBlock> blocks;
  for (std::size_t n = 0; n < nets.size(); ++n) {
    auto& net = nets[n];
    const auto& g = grads.nets[n];
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      if (g.weights[l].size() != net.weights[l].size()) throw std::invalid_argument("param_blocks: shape mismatch");
      blocks.push_back({net.weights[l].data(), g.weights[l].data(), static_cast<std::size_t>(net.weights[l].size())});
      blocks.push_back({net.biases[l].data(), g.biases[l].data(), static_cast<std::size_t>(net.biases[l].size())});
    }
  }
  return blocks;
}

double clip_gradients(ModelGradients& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads.nets) sq += g.squared_norm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& g : grads.nets) g.scale(f);
  }
  return norm;
}

double step_lr(double base, long epoch, long step_size, double gamma) {
  if (step_size <= 0) return base;
  return base * std::pow(gamma, static_cast<double>(epoch / step_size));
}

}  // namespace addpinn
