#include "addpinn/trainer.hpp"

#include "addpinn/autodiff.hpp"
#include "addpinn/optim.hpp"
#include "addpinn/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace addpinn {

namespace {

constexpr Eigen::Index kChunk = 2048;

long scale_count(long v, double f) { return std::max<long>(1, std::lround(static_cast<double>(v) * f)); }

Eigen::VectorXd abs_residuals(const PinnNetwork& net, const Eigen::Matrix2Xd& pts, const NondimCoeffs& coeffs,
                              double eps_visc) {
  Eigen::VectorXd out(pts.cols());
  const bool second = eps_visc != 0.0;
  for (Eigen::Index start = 0; start < pts.cols(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, pts.cols() - start);
    const EvalBundle b = eval_with_input_derivs(net, pts.middleCols(start, len), second);
    const Eigen::VectorXd r = second ? viscosity_residual(b, coeffs, eps_visc) : pde_residual(b, coeffs);
    out.segment(start, len) = r.cwiseAbs();
  }
  return out;
}

Eigen::Matrix2Xd gather(const Eigen::Matrix2Xd& pts, const std::vector<int>& idx) {
  Eigen::Matrix2Xd out(2, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = pts.col(idx[k]);
  return out;
}

struct Features {
  bool pde = true;
  bool causal = false;
  bool rar_always = false;
  bool rar_stage2 = false;
  bool two_stage = false;
  bool xpinn = false;
  double eps_visc = 0.0;
};

Features features(MethodId id, const Hyperparams& h) {
  Features f;
  switch (id) {
    case MethodId::B1_nn: f.pde = false; break;
    case MethodId::B2_pinn: break;
    case MethodId::B3_rar: f.rar_always = true; break;
    case MethodId::B4_viscosity: f.eps_visc = h.eps_visc; break;
    case MethodId::B5_xpinn: f.xpinn = true; break;
    case MethodId::B6_addpinn:
      f.causal = true;
      f.rar_stage2 = true;
      f.two_stage = true;
      break;
  }
  return f;
}

class Session {
public:
  Session(const MethodSpec& method, const ObservationSet& obs, const NondimCoeffs& coeffs, const Hyperparams& hyper,
          std::uint64_t seed)
      : method_(method), obs_(obs), coeffs_(coeffs), h_(hyper), seed_(seed), f_(features(method.id, hyper)),
        data_(training_data(obs)) {
    log_.method = method;
    log_.seed = seed;
  }

  TrainResult run() {
    const auto start = std::chrono::steady_clock::now();
    try {
      if (f_.xpinn) {
        std::vector<PinnNetwork> nets;
        for (std::uint64_t s = 0; s < 4; ++s)
          nets.push_back(init_network(h_.child_arch, derive_seed(seed_, Stream::network_init, {1 + s})));
        part_ = Partition::grid(Direction::spacetime, {0.5}, {0.5}, std::move(nets));
      } else {
        part_ = Partition::single(init_network(h_.parent_arch, derive_seed(seed_, Stream::network_init, {0})));
      }
      const long stage1_end = f_.two_stage ? h_.epochs_stage1 : h_.epochs_total;
      reset_pools(0);
      if (!f_.two_stage) record_initial_pools();
      for (long epoch = 1; epoch <= h_.epochs_total; ++epoch) {
        const bool stage2 = f_.two_stage && epoch > stage1_end;
        if (f_.two_stage && epoch == stage1_end + 1) transition();
        double lr = h_.lr_stage1;
        if (stage2) lr = step_lr(h_.lr_stage2, epoch - stage1_end - 1, h_.steplr_step, h_.steplr_gamma);
        if (f_.xpinn) lr = step_lr(h_.lr_stage1, epoch - 1, h_.steplr_step, h_.steplr_gamma);
        const EpochRecord rec = step(epoch, lr, stage2 || f_.xpinn);
        log_.epochs.push_back(rec);
        if (f_.two_stage && epoch == stage1_end) log_.stage1_last_loss = rec.total;
        if (stage2 && epoch == stage1_end + 1) log_.stage2_first_loss = rec.total;
        const bool rar_now = (f_.rar_always || (f_.rar_stage2 && stage2)) && epoch % h_.rar_period == 0 &&
                             epoch < h_.epochs_total;
        if (rar_now) refine(epoch);
      }
    } catch (const std::runtime_error& e) {
      log_.diverged = true;
      log_.message = e.what();
      log_.time_s = seconds_since(start);
      throw TrainingDiverged(std::string("training diverged: ") + e.what(), log_);
    }
    for (const auto& p : pools_) log_.final_pool_sizes.push_back(static_cast<std::size_t>(p.size()));
    for (const auto& st : part_.interfaces()) {
      log_.shock_steps.push_back(st.shock_steps);
      log_.smooth_steps.push_back(st.smooth_steps);
    }
    log_.time_s = seconds_since(start);
    return {std::move(part_), std::move(log_), std::move(stage1_)};
  }

private:
  static double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  void record_initial_pools() {
    log_.initial_pool_sizes.clear();
    for (const auto& p : pools_) log_.initial_pool_sizes.push_back(static_cast<std::size_t>(p.size()));
  }

  void route_data() {
    data_sub_.resize(static_cast<std::size_t>(data_.points.cols()));
    for (Eigen::Index i = 0; i < data_.points.cols(); ++i)
      data_sub_[static_cast<std::size_t>(i)] = part_.locate(data_.points(0, i), data_.points(1, i));
  }

  void rebin(CollocationPool& pool) const {
    if (!f_.causal) return;
    const Eigen::VectorXd t = pool.points.row(1).transpose();
    pool.bins = assign_time_bins(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())),
                                 h_.causal.n_bins);
  }

  void reset_pools(std::uint64_t phase) {
    route_data();
    pools_.clear();
    if (!f_.pde) return;
    for (std::size_t s = 0; s < part_.n_subdomains(); ++s) {
      const Box box = part_.subdomain(s);
      const int n = part_.n_subdomains() == 1
                        ? h_.n_colloc
                        : std::max(1, static_cast<int>(std::lround(h_.n_colloc * box.area())));
      CollocationPool pool;
      pool.points = latin_hypercube(n, box, derive_seed(seed_, Stream::collocation, {phase, s}));
      pool.abs_residual = f_.causal ? abs_residuals(part_.nets()[s], pool.points, coeffs_, f_.eps_visc)
                                    : Eigen::VectorXd::Zero(n);
      rebin(pool);
      pools_.push_back(std::move(pool));
    }
  }

  void transition() {
    stage1_ = part_;
    const PinnNetwork parent = part_.nets().front();
    log_.decision = decide(obs_, part_, coeffs_, method_.mode, method_.direction, h_.decomposition);
    log_.decision_made = true;
    if (log_.decision.decomposed)
      part_ = create_children(parent, log_.decision, h_.child_arch, h_.child_init,
                              derive_seed(seed_, Stream::child_init), &log_.child_init);
    adam_ = Adam();
    reset_pools(1);
    record_initial_pools();
  }

  std::vector<double> bin_weights(const CollocationPool& pool) const {
    const int n_bins = static_cast<int>(std::min<Eigen::Index>(h_.causal.n_bins, pool.size()));
    const auto means = bin_mean_squares(
        std::span<const double>(pool.abs_residual.data(), static_cast<std::size_t>(pool.size())), pool.bins, n_bins);
    return causal_weights(means, h_.causal.epsilon);
  }

  EpochRecord step(long epoch, double lr, bool with_interfaces) {
    std::vector<const PinnNetwork*> nets;
    for (const auto& n : part_.nets()) nets.push_back(&n);
    const std::size_t n_sub = part_.n_subdomains();
    const std::size_t n_iface = part_.interfaces().size();
    const auto ep = static_cast<std::uint64_t>(epoch);
    EpochRecord rec;
    rec.lr = lr;
    std::vector<InterfaceKind> kinds;

    auto objective = [&](LossBuilder& b) {
      LossParts parts;
      const int n_data = static_cast<int>(data_.points.cols());
      const auto batch = sample_without_replacement(n_data, std::min(h_.batch_data, n_data),
                                                    derive_seed(seed_, Stream::data_batch, {ep}));
      std::vector<std::vector<int>> routed(n_sub);
      for (int i : batch) routed[data_sub_[static_cast<std::size_t>(i)]].push_back(i);
      const double nb = static_cast<double>(batch.size());
      for (std::size_t s = 0; s < n_sub; ++s) {
        if (routed[s].empty()) continue;
        auto& ev = b.evaluate(s, gather(data_.points, routed[s]), DerivOrder::value);
        Eigen::VectorXd target(static_cast<Eigen::Index>(routed[s].size()));
        for (std::size_t k = 0; k < routed[s].size(); ++k) target(static_cast<Eigen::Index>(k)) = data_.targets(routed[s][k]);
        const Eigen::VectorXd diff = ev.bundle.u - target;
        parts.data += diff.squaredNorm() / nb;
        ev.adjoint.u += (2.0 * h_.weights.data / nb) * diff;
      }

      if (f_.pde) {
        const int per_sub = h_.colloc_batch_per_subdomain(n_sub);
        const DerivOrder order = f_.eps_visc != 0.0 ? DerivOrder::second : DerivOrder::first;
        std::vector<ResidualBatch> batches(n_sub);
        std::vector<LossBuilder::Evaluation*> evals(n_sub);
        std::vector<std::vector<int>> picked(n_sub);
        for (std::size_t s = 0; s < n_sub; ++s) {
          auto& pool = pools_[s];
          const int size = static_cast<int>(pool.size());
          picked[s] = sample_without_replacement(size, std::min(per_sub, size),
                                                 derive_seed(seed_, Stream::colloc_batch, {ep, s}));
          evals[s] = &b.evaluate(s, gather(pool.points, picked[s]), order);
          batches[s].residual = f_.eps_visc != 0.0 ? viscosity_residual(evals[s]->bundle, coeffs_, f_.eps_visc)
                                                   : pde_residual(evals[s]->bundle, coeffs_);
          if (f_.causal) {
            const auto w = bin_weights(pool);
            batches[s].weight.resize(static_cast<Eigen::Index>(picked[s].size()));
            for (std::size_t k = 0; k < picked[s].size(); ++k)
              batches[s].weight(static_cast<Eigen::Index>(k)) = w[static_cast<std::size_t>(pool.bins[static_cast<std::size_t>(picked[s][k])])];
          }
        }
        std::vector<Eigen::VectorXd> d_r;
        parts.pde = pde_loss(batches, &d_r, h_.weights.pde);
        for (std::size_t s = 0; s < n_sub; ++s) {
          residual_backward(evals[s]->bundle, coeffs_, f_.eps_visc, d_r[s], evals[s]->adjoint);
          for (std::size_t k = 0; k < picked[s].size(); ++k)
            pools_[s].abs_residual(picked[s][k]) = std::abs(batches[s].residual(static_cast<Eigen::Index>(k)));
        }
      }

      if (with_interfaces && n_iface > 0) {
        if (f_.xpinn) {
          parts.interface = xpinn_interface_loss(part_, b, coeffs_, h_.interfaces.n_samples, seed_, ep,
                                                 h_.weights.interface);
        } else {
          const auto res = interface_loss(part_, b, h_.interfaces, seed_, ep, h_.weights.interface);
          parts.interface = res.value;
          kinds = res.kinds;
        }
      }
      rec.data = parts.data;
      rec.pde = parts.pde;
      rec.interface = parts.interface;
      return total_loss(parts, h_.weights);
    };

    auto lg = loss_gradients(nets, n_iface, objective);
    rec.total = lg.loss;
    clip_gradients(lg.grads, h_.clip_norm);
    adam_.step(param_blocks(std::span<PinnNetwork>(part_.nets()), lg.grads), lr);

    auto& ifaces = part_.interfaces();
    if (!f_.xpinn && with_interfaces && n_iface > 0) {
      std::vector<double> speeds;
      for (std::size_t k = 0; k < n_iface; ++k) {
        auto& st = ifaces[k];
        if (st.orientation == Orientation::spatial) {
          st.shock_speed -= h_.shock_speed_lr * lg.grads.shock_speeds[k];
          st.kind = kinds[k];
          (st.kind == InterfaceKind::shock ? st.shock_steps : st.smooth_steps) += 1;
        }
        speeds.push_back(st.shock_speed);
      }
      log_.shock_speeds.push_back(std::move(speeds));
    }
    return rec;
  }

  void refine(long epoch) {
    for (std::size_t s = 0; s < part_.n_subdomains(); ++s) {
      const auto& net = part_.nets()[s];
      const ResidualFn fn = [&](const Eigen::Matrix2Xd& p) { return abs_residuals(net, p, coeffs_, f_.eps_visc); };
      RarRound round = rar_refine(fn, part_.subdomain(s), pools_[s], h_.rar_candidates, h_.rar_added,
                                  derive_seed(seed_, Stream::rar, {static_cast<std::uint64_t>(epoch), s}));
      round.epoch = epoch;
      round.subdomain = s;
      rebin(pools_[s]);
      log_.rar_rounds.push_back(std::move(round));
    }
  }

  MethodSpec method_;
  const ObservationSet& obs_;
  NondimCoeffs coeffs_;
  Hyperparams h_;
  std::uint64_t seed_;
  Features f_;
  TrainingData data_;
  std::vector<std::size_t> data_sub_;
  Partition part_;
  std::optional<Partition> stage1_;
  std::vector<CollocationPool> pools_;
  Adam adam_;
  RunLog log_;
};

}  // namespace

Hyperparams Hyperparams::scaled(double factor) const {
  if (!(factor > 0.0) || factor > 1.0) throw std::invalid_argument("scale factor must lie in (0, 1]");
  Hyperparams h = *this;
  h.epochs_total = scale_count(epochs_total, factor);
  h.epochs_stage1 = scale_count(epochs_stage1, factor);
  h.rar_period = scale_count(rar_period, factor);
  h.steplr_step = scale_count(steplr_step, factor);
  return h;
}

Hyperparams Hyperparams::desk() {
  Hyperparams h;
  h.parent_arch = {{2, 64, 32, 32, 32, 1}, 10.0};
  h.child_arch = {{2, 64, 32, 32, 1}, 10.0};
  h.batch_data = 1024;
  h.batch_colloc = 1024;
  h.batch_colloc_min = 256;
  return h;
}

int Hyperparams::colloc_batch_per_subdomain(std::size_t n_subdomains) const {
  if (n_subdomains == 0) throw std::invalid_argument("colloc batch: no subdomains");
  return std::max(batch_colloc_min, batch_colloc / static_cast<int>(n_subdomains));
}

void Hyperparams::validate() const {
  auto positive = [](bool ok, const char* name) {
    if (!ok) throw std::invalid_argument(std::string("hyperparameter must be positive: ") + name);
  };
  positive(epochs_total > 0, "epochs_total");
  positive(epochs_stage1 > 0, "epochs_stage1");
  positive(lr_stage1 > 0, "lr_stage1");
  positive(lr_stage2 > 0, "lr_stage2");
  positive(steplr_step > 0, "steplr_step");
  positive(steplr_gamma > 0, "steplr_gamma");
  positive(clip_norm > 0, "clip_norm");
  positive(batch_data > 0, "batch_data");
  positive(batch_colloc > 0, "batch_colloc");
  positive(batch_colloc_min > 0, "batch_colloc_min");
  positive(n_colloc > 0, "n_colloc");
  positive(rar_period > 0, "rar_period");
  positive(rar_candidates > 0, "rar_candidates");
  positive(rar_added > 0, "rar_added");
  positive(shock_speed_lr > 0, "shock_speed_lr");
  positive(causal.n_bins >= 1, "causal.n_bins");
  positive(child_init.epochs > 0 && child_init.points > 0 && child_init.lr > 0, "child_init");
  positive(interfaces.n_samples > 0, "interfaces.n_samples");
  if (eps_visc < 0 || causal.epsilon < 0) throw std::invalid_argument("eps_visc and causal epsilon must be >= 0");
  if (epochs_stage1 >= epochs_total) throw std::invalid_argument("epochs_stage1 must be below epochs_total");
  if (rar_added > rar_candidates) throw std::invalid_argument("rar_added exceeds rar_candidates");
  parent_arch.validate();
  child_arch.validate();
}

std::string to_string(MethodId id) {
  switch (id) {
    case MethodId::B1_nn: return "B1_nn";
    case MethodId::B2_pinn: return "B2_pinn";
    case MethodId::B3_rar: return "B3_rar";
    case MethodId::B4_viscosity: return "B4_viscosity";
    case MethodId::B5_xpinn: return "B5_xpinn";
    case MethodId::B6_addpinn: return "B6_addpinn";
  }
  return "?";
}

MethodId method_from_string(const std::string& name) {
  for (auto id : {MethodId::B1_nn, MethodId::B2_pinn, MethodId::B3_rar, MethodId::B4_viscosity, MethodId::B5_xpinn,
                  MethodId::B6_addpinn}) {
    const auto full = to_string(id);
    if (name == full || name == full.substr(0, 2)) return id;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

void CollocationPool::append(const Eigen::Matrix2Xd& extra, const Eigen::VectorXd& extra_abs_residual) {
  if (extra.cols() != extra_abs_residual.size()) throw std::invalid_argument("pool append: size mismatch");
  const Eigen::Index n = size();
  points.conservativeResize(2, n + extra.cols());
  points.rightCols(extra.cols()) = extra;
  abs_residual.conservativeResize(n + extra.cols());
  abs_residual.tail(extra.cols()) = extra_abs_residual;
}

RarRound rar_refine(const ResidualFn& abs_residual, const Box& box, CollocationPool& pool, int candidates, int added,
                    std::uint64_t seed) {
  if (candidates < 1 || added < 1) throw std::invalid_argument("rar_refine: counts must be positive");
  const Eigen::Matrix2Xd cand = uniform_points(candidates, box, seed);
  const Eigen::VectorXd r = abs_residual(cand);
  std::vector<int> order(static_cast<std::size_t>(candidates));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r(a) > r(b); });
  const int k = std::min(added, candidates);
  RarRound out;
  out.added = static_cast<std::size_t>(k);
  out.min_added = r(order[static_cast<std::size_t>(k - 1)]);
  out.max_rejected = k < candidates ? r(order[static_cast<std::size_t>(k)]) : 0.0;
  std::vector<int> keep(order.begin(), order.begin() + k);
  out.added_points = gather(cand, keep);
  Eigen::VectorXd kept_r(k);
  for (int i = 0; i < k; ++i) kept_r(i) = r(keep[static_cast<std::size_t>(i)]);
  pool.append(out.added_points, kept_r);
  return out;
}

TrainingData training_data(const ObservationSet& obs) {
  if (obs.empty()) throw std::invalid_argument("training_data: no observations");
  if (obs.n_cells < 2 || obs.n_steps < 2) throw std::invalid_argument("training_data: grid geometry missing");
  TrainingData d;
  const auto n = static_cast<Eigen::Index>(obs.records.size());
  d.points.resize(2, n);
  d.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = obs.records[static_cast<std::size_t>(i)];
    d.points(0, i) = static_cast<double>(r.cell) / (obs.n_cells - 1);
    d.points(1, i) = static_cast<double>(r.step) / (obs.n_steps - 1);
    d.targets(i) = obs.stats.normalize(r.speed);
  }
  return d;
}

TrainResult train(const MethodSpec& method, const ObservationSet& obs, const NondimCoeffs& coeffs,
                  const Hyperparams& hyper, std::uint64_t seed) {
  hyper.validate();
  return Session(method, obs, coeffs, hyper, seed).run();
}

}  // namespace addpinn
