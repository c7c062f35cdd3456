#include "tiny.hpp"

#include "addpinn/evaluation.hpp"
#include "addpinn/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace addpinn;
using namespace testing_support;

TEST_CASE("RAR keeps the exact top-k") {
  CollocationPool pool;
  pool.points = uniform_points(10, Box{}, 1);
  pool.abs_residual = Eigen::VectorXd::Zero(10);
  const ResidualFn bumpy = [](const Eigen::Matrix2Xd& p) {
    return Eigen::VectorXd((p.row(0).array() * 13.0).sin().abs() + p.row(1).array().square());
  };
  const RarRound r = rar_refine(bumpy, Box{}, pool, 500, 120, 7);
  CHECK(pool.size() == 130);
  CHECK(r.added == 120);
  const Eigen::VectorXd all = bumpy(uniform_points(500, Box{}, 7));
  const Eigen::VectorXd kept = bumpy(r.added_points);
  int above = 0;
  for (Eigen::Index i = 0; i < all.size(); ++i) above += all(i) >= kept.minCoeff();
  CHECK(above == 120);
  CHECK(r.min_added >= r.max_rejected);
}

TEST_CASE("RAR on a zero residual grows the pool by exactly the added count") {
  CollocationPool pool;
  pool.points = uniform_points(5, Box{}, 1);
  pool.abs_residual = Eigen::VectorXd::Zero(5);
  const ResidualFn zero = [](const Eigen::Matrix2Xd& p) { return Eigen::VectorXd::Zero(p.cols()).eval(); };
  rar_refine(zero, Box{}, pool, 5000, 2500, 3);
  CHECK(pool.size() == 2505);
}

TEST_CASE("RAR follows residual mass into one half") {
  CollocationPool pool;
  const ResidualFn left = [](const Eigen::Matrix2Xd& p) {
    return Eigen::VectorXd((p.row(0).array() < 0.5).cast<double>() * (1.0 + p.row(1).array()));
  };
  const RarRound r = rar_refine(left, Box{}, pool, 5000, 2500, 11);
  const double frac = (r.added_points.row(0).array() < 0.5).cast<double>().mean();
  CHECK(frac >= 0.95);
}

TEST_CASE("hyperparameter scaling and validation") {
  const Hyperparams h = Hyperparams().scaled(0.25);
  CHECK(h.epochs_total == 5000);
  CHECK(h.epochs_stage1 == 1250);
  CHECK(h.rar_period == 625);
  CHECK(h.steplr_step == 1250);
  CHECK_THROWS(Hyperparams().scaled(0.0));
  CHECK_THROWS(Hyperparams().scaled(1.5));
  Hyperparams bad;
  bad.epochs_stage1 = bad.epochs_total;
  CHECK_THROWS(bad.validate());
  CHECK(Hyperparams().colloc_batch_per_subdomain(1) == 2048);
  CHECK(Hyperparams().colloc_batch_per_subdomain(4) == 512);
  CHECK(Hyperparams().colloc_batch_per_subdomain(8) == 512);
}

TEST_CASE("method names") {
  CHECK(method_from_string("B3_rar") == MethodId::B3_rar);
  CHECK(method_from_string("B6") == MethodId::B6_addpinn);
  CHECK_THROWS(method_from_string("B9"));
}

TEST_CASE("data-only baseline never touches the PDE") {
  const auto d = prepared(small_riemann());
  const auto r = train({MethodId::B1_nn}, d.obs, d.coeffs, tiny_hyper(), 1);
  CHECK(r.log.epochs.size() == 40);
  for (const auto& e : r.log.epochs) CHECK(e.pde == 0.0);
  CHECK(r.model.n_subdomains() == 1);
}

TEST_CASE("two-stage run on shock data") {
  const auto d = prepared(small_riemann());
  const Hyperparams h = tiny_hyper();
  const MethodSpec m{MethodId::B6_addpinn, DecompositionMode::decomposition_enabled, Direction::spatial};
  const auto r = train(m, d.obs, d.coeffs, h, 4);
  CHECK(r.log.decision_made);
  CHECK(r.model.n_subdomains() == 2);
  CHECK(r.model.interfaces().size() == 1);
  REQUIRE(r.stage1.has_value());
  CHECK(r.stage1->n_subdomains() == 1);
  for (long e = 0; e < h.epochs_total; ++e) {
    const auto& rec = r.log.epochs[static_cast<std::size_t>(e)];
    if (e < h.epochs_stage1) {
      CHECK(rec.lr == h.lr_stage1);
      CHECK(rec.interface == 0.0);
    } else {
      CHECK(rec.lr <= h.lr_stage2);
    }
  }
  CHECK(r.log.shock_speeds.size() == static_cast<std::size_t>(h.epochs_total - h.epochs_stage1));
  // Pool growth: initial + rounds * added per subdomain.
  std::size_t rounds = r.log.rar_rounds.size() / r.model.n_subdomains();
  for (std::size_t s = 0; s < r.model.n_subdomains(); ++s)
    CHECK(r.log.final_pool_sizes[s] == r.log.initial_pool_sizes[s] + rounds * static_cast<std::size_t>(h.rar_added));
  CHECK(rounds == 1);  // Stage 2 covers epochs 21..40; 40 is the final epoch
  for (const auto& round : r.log.rar_rounds) CHECK(round.min_added >= round.max_rejected);
  const double total = std::accumulate(r.log.final_pool_sizes.begin(), r.log.final_pool_sizes.end(), std::size_t{0});
  CHECK(total > 0);
}

TEST_CASE("shock screening falls back on smooth data") {
  const auto d = prepared(small_uniform());
  const auto r = train({MethodId::B6_addpinn}, d.obs, d.coeffs, tiny_hyper(), 2);
  CHECK(r.log.decision_made);
  CHECK_FALSE(r.log.decision.decomposed);
  CHECK(r.log.decision.reason.find("fallback") != std::string::npos);
  CHECK(r.model.n_subdomains() == 1);
  CHECK(r.model.interfaces().empty());
}

TEST_CASE("single-domain baselines keep a constant rate") {
  const auto d = prepared(small_riemann());
  const auto r = train({MethodId::B2_pinn}, d.obs, d.coeffs, tiny_hyper(), 1);
  for (const auto& e : r.log.epochs) CHECK(e.lr == 1e-3);
}

TEST_CASE("XPINN baseline trains four subnets") {
  const auto d = prepared(small_riemann());
  const auto r = train({MethodId::B5_xpinn}, d.obs, d.coeffs, tiny_hyper(), 3);
  CHECK(r.model.n_subdomains() == 4);
  CHECK(r.model.x_splits() == std::vector<double>{0.5});
  CHECK(r.model.t_splits() == std::vector<double>{0.5});
  CHECK(r.log.epochs.front().interface > 0.0);
  CHECK(r.log.epochs[9].lr == 1e-3);
  CHECK(r.log.epochs[10].lr == doctest::Approx(0.9e-3));
}

TEST_CASE("RAR baseline refines throughout") {
  const auto d = prepared(small_riemann());
  const auto r = train({MethodId::B3_rar}, d.obs, d.coeffs, tiny_hyper(), 3);
  CHECK(r.log.rar_rounds.size() == 3);  // epochs 10, 20, 30
}

TEST_CASE("training is deterministic") {
  const auto d = prepared(small_riemann());
  const MethodSpec m{MethodId::B6_addpinn, DecompositionMode::decomposition_enabled, Direction::spacetime};
  const auto a = train(m, d.obs, d.coeffs, tiny_hyper(), 9);
  const auto b = train(m, d.obs, d.coeffs, tiny_hyper(), 9);
  const double la = evaluate(a.model, d.truth, d.obs.stats).rel_l2_pct;
  const double lb = evaluate(b.model, d.truth, d.obs.stats).rel_l2_pct;
  CHECK(la == lb);
  CHECK(a.log.decision.x_splits == b.log.decision.x_splits);
  CHECK(a.log.decision.t_splits == b.log.decision.t_splits);
  CHECK(a.model.n_subdomains() == 4);
}

TEST_CASE("empty observations are rejected") {
  const auto d = prepared(small_riemann());
  ObservationSet empty = d.obs;
  empty.records.clear();
  CHECK_THROWS(train({MethodId::B2_pinn}, empty, d.coeffs, tiny_hyper(), 1));
}
