#pragma once

#include "addpinn/decomposition.hpp"
#include "addpinn/field.hpp"
#include "addpinn/interfaces.hpp"
#include "addpinn/losses.hpp"
#include "addpinn/lwr.hpp"
#include "addpinn/network.hpp"
#include "addpinn/partition.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace addpinn {

struct Hyperparams {
  long epochs_total = 20000;
  long epochs_stage1 = 5000;
  double lr_stage1 = 1e-3;
  double lr_stage2 = 1e-4;
  long steplr_step = 5000;
  double steplr_gamma = 0.9;
  double clip_norm = 5.0;
  int batch_data = 4096;
  int batch_colloc = 2048;      // divided across subdomains
  int batch_colloc_min = 512;   // per-subdomain floor
  int n_colloc = 50000;
  long rar_period = 2500;
  int rar_candidates = 5000;
  int rar_added = 2500;
  double eps_visc = 0.1;
  double shock_speed_lr = 1e-3;
  CausalConfig causal;
  LossWeights weights;
  DecompositionConfig decomposition;
  ChildInitConfig child_init;
  InterfaceConfig interfaces;
  Architecture parent_arch = Architecture::parent();
  Architecture child_arch = Architecture::child();

  /// Multiplies epochs_total, epochs_stage1, rar_period and steplr_step by factor (rounded, at least 1).
  Hyperparams scaled(double factor) const;
  /// Reduced widths and batches for single-core runs; epochs untouched.
  static Hyperparams desk();
  int colloc_batch_per_subdomain(std::size_t n_subdomains) const;
  void validate() const;
};

enum class MethodId { B1_nn, B2_pinn, B3_rar, B4_viscosity, B5_xpinn, B6_addpinn };

std::string to_string(MethodId id);
MethodId method_from_string(const std::string& name);

struct MethodSpec {
  MethodId id = MethodId::B6_addpinn;
  DecompositionMode mode = DecompositionMode::shock_screened;
  Direction direction = Direction::spatial;
};

/// Collocation points of one subdomain with the latest known |r| at each point.
struct CollocationPool {
  Eigen::Matrix2Xd points;
  Eigen::VectorXd abs_residual;
  std::vector<int> bins;  // causal time bins, empty when unused

  Eigen::Index size() const { return points.cols(); }
  void append(const Eigen::Matrix2Xd& extra, const Eigen::VectorXd& extra_abs_residual);
};

struct RarRound {
  long epoch = 0;
  std::size_t subdomain = 0;
  std::size_t added = 0;
  double min_added = 0.0;     // smallest |r| among the added candidates
  double max_rejected = 0.0;  // largest |r| among the rejected ones (0 when none)
  Eigen::Matrix2Xd added_points;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::Matrix2Xd&)>;

/// Draws `candidates` uniform points in `box`, keeps the `added` largest |r| (ties: earlier draw)
/// and appends them to the pool.
RarRound rar_refine(const ResidualFn& abs_residual, const Box& box, CollocationPool& pool, int candidates, int added,
                    std::uint64_t seed);

struct EpochRecord {
  double total = 0.0;
  double data = 0.0;
  double pde = 0.0;
  double interface = 0.0;
  double lr = 0.0;
};

struct RunLog {
  MethodSpec method;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  bool decision_made = false;
  SplitDecision decision;
  ChildInitReport child_init;
  std::vector<std::vector<double>> shock_speeds;  // per epoch of Stage 2, one entry per interface
  std::vector<std::size_t> shock_steps, smooth_steps;
  double stage1_last_loss = 0.0;
  double stage2_first_loss = 0.0;
  std::vector<std::size_t> initial_pool_sizes;  // at the start of the final stage
  std::vector<std::size_t> final_pool_sizes;
  std::vector<RarRound> rar_rounds;
  double time_s = 0.0;
  bool diverged = false;
  std::string message;
};

struct TrainResult {
  Partition model;
  RunLog log;
  std::optional<Partition> stage1;  // coarse model at the transition step (two-stage methods)
};

class TrainingDiverged : public std::runtime_error {
public:
  TrainingDiverged(const std::string& what, RunLog log) : std::runtime_error(what), log_(std::move(log)) {}
  const RunLog& log() const { return log_; }

private:
  RunLog log_;
};

/// Data in normalized coordinates: points (x_hat, t_hat) and normalized speeds.
struct TrainingData {
  Eigen::Matrix2Xd points;
  Eigen::VectorXd targets;
};

TrainingData training_data(const ObservationSet& obs);

/// Trains one method on the observations. Deterministic in (method, obs, coeffs, hyper, seed).
TrainResult train(const MethodSpec& method, const ObservationSet& obs, const NondimCoeffs& coeffs,
                  const Hyperparams& hyper, std::uint64_t seed);

}  // namespace addpinn
