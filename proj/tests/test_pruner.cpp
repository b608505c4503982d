#include "prunelab/pruner.hpp"

#include "prunelab/checkpoint.hpp"
#include "prunelab/metrics.hpp"
#include "prunelab/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace prunelab;

namespace {

PruneConfig make_config(CriterionKind kind, double kappa, int pi, Schedule mode) {
  PruneConfig cfg;
  cfg.criterion = {kind, 0.0};
  cfg.kappa = kappa;
  cfg.pi = pi;
  cfg.schedule = mode;
  cfg.saliency_sample_size = 64;
  cfg.trace_full_loss = false;
  return cfg;
}

}  // namespace

TEST_CASE("schedule values by hand") {
  SUBCASE("linear thirds") {
    CHECK(schedule_sparsity(Schedule::Linear, 0.9, 3, 1) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(schedule_sparsity(Schedule::Linear, 0.9, 3, 2) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(schedule_sparsity(Schedule::Linear, 0.9, 3, 3) == 0.9);
  }
  SUBCASE("exponential constant keep ratio") {
    // kappa=0.75, pi=2: keep fraction sqrt(0.25)=0.5 per iteration
    CHECK(schedule_sparsity(Schedule::Exponential, 0.75, 2, 1) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(schedule_sparsity(Schedule::Exponential, 0.75, 2, 2) == 0.75);
  }
  SUBCASE("final iteration hits kappa exactly for both modes") {
    for (int pi : {1, 7, 140}) {
      CHECK(schedule_sparsity(Schedule::Linear, 0.9885, pi, pi) == 0.9885);
      CHECK(schedule_sparsity(Schedule::Exponential, 0.9885, pi, pi) == 0.9885);
    }
  }
  SUBCASE("monotone non-decreasing in the iteration index") {
    for (Schedule mode : {Schedule::Linear, Schedule::Exponential}) {
      double prev = 0.0;
      for (int i = 1; i <= 20; ++i) {
        const double k = schedule_sparsity(mode, 0.95, 20, i);
        CHECK(k >= prev);
        prev = k;
      }
    }
  }
}

TEST_CASE("one-shot magnitude pruning removes the smallest half") {
  // D=10 parameters: 1x2 identity layer is too small, use 2x3 + bias = 9... use
  // a {4,2} identity net: 8 weights + 2 biases = 10 coordinates.
  Network net = Network::zeros({4, 2}, {Activation::Identity});
  REQUIRE(net.param_count() == 10);
  net.params() << 10, -9, 8, -7, 6, -5, 4, -3, 2, -1;

  PruneConfig cfg = make_config(CriterionKind::MP, 0.5, 1, Schedule::Linear);
  LossModelStats stats;  // MP needs none
  const Mask pruned = prune_iteration(net, Mask::ones(10), cfg, 1, stats);
  // the five smallest magnitudes are at indices 5..9
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(pruned[i] == 1);
  for (Eigen::Index i = 5; i < 10; ++i) CHECK(pruned[i] == 0);
  CHECK(pruned.sparsity() == doctest::Approx(0.5));
}

TEST_CASE("saliency ties break toward the lower index") {
  Network net = Network::zeros({4, 2}, {Activation::Identity});
  net.params().setOnes();  // all saliencies equal
  PruneConfig cfg = make_config(CriterionKind::MP, 0.3, 1, Schedule::Linear);
  LossModelStats stats;
  const Mask pruned = prune_iteration(net, Mask::ones(10), cfg, 1, stats);
  CHECK(pruned.pruned_count() == 3);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(pruned[i] == 0);
  for (Eigen::Index i = 3; i < 10; ++i) CHECK(pruned[i] == 1);
}

TEST_CASE("iterative masks are nested and hit the scheduled counts") {
  const Dataset ds = synthetic_gaussian_mixture(200, 8, 4, 3);
  Network net = Network::glorot_init({8, 12, 4}, {Activation::Tanh, Activation::Identity}, 3);
  for (Schedule mode : {Schedule::Linear, Schedule::Exponential}) {
    for (CriterionKind kind :
         {CriterionKind::MP, CriterionKind::OBD, CriterionKind::LM, CriterionKind::QM}) {
      PruneConfig cfg = make_config(kind, 0.8, 5, mode);
      cfg.seed = 11;
      auto [mask, trace] = run_pruning(net, ds, cfg);
      const double d = static_cast<double>(net.param_count());
      CHECK(mask.pruned_count() ==
            static_cast<std::ptrdiff_t>(std::floor(0.8 * d + 0.5)));
      REQUIRE(trace.rows.size() == 5);
      // scheduled sparsity reported per row
      for (int i = 0; i < 5; ++i)
        CHECK(trace.rows[i].kappa_i ==
              doctest::Approx(schedule_sparsity(mode, 0.8, 5, i + 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("pruning is idempotent at the target sparsity") {
  Network net = Network::glorot_init({6, 8, 3}, {Activation::Tanh, Activation::Identity}, 4);
  PruneConfig cfg = make_config(CriterionKind::MP, 0.5, 1, Schedule::Linear);
  LossModelStats stats;
  const Mask once = prune_iteration(net, Mask::ones(net.param_count()), cfg, 1, stats);
  const Mask twice = prune_iteration(net, once, cfg, 1, stats);
  CHECK(once.bits() == twice.bits());
}

TEST_CASE("step norms and delta loss are reproducible per seed") {
  const Dataset ds = synthetic_gaussian_mixture(300, 8, 4, 7);
  Network net = Network::glorot_init({8, 10, 4}, {Activation::Tanh, Activation::Identity}, 7);
  PruneConfig cfg = make_config(CriterionKind::QM, 0.9, 4, Schedule::Exponential);
  cfg.seed = 21;
  cfg.trace_full_loss = true;
  auto [m1, t1] = run_pruning(net, ds, cfg);
  auto [m2, t2] = run_pruning(net, ds, cfg);
  CHECK(m1.bits() == m2.bits());
  CHECK(t1.final_delta_loss == t2.final_delta_loss);
  REQUIRE(t1.rows.size() == t2.rows.size());
  for (std::size_t i = 0; i < t1.rows.size(); ++i) {
    CHECK(t1.rows[i].step_norm == t2.rows[i].step_norm);
    CHECK(t1.rows[i].train_loss_after == t2.rows[i].train_loss_after);
  }
  // cumulative delta loss in the last row equals the final figure
  CHECK(t1.rows.back().delta_loss_cumulative == doctest::Approx(t1.final_delta_loss));
  CHECK(t1.max_step_norm() >= t1.rows.front().step_norm);
}

TEST_CASE("magnitude pruning reaches the same mask regardless of pi") {
  // MP saliencies do not depend on the data or on already-pruned coordinates,
  // so splitting the schedule into more iterations changes nothing.
  const Dataset ds = synthetic_gaussian_mixture(100, 6, 3, 9);
  Network net = Network::glorot_init({6, 9, 3}, {Activation::Tanh, Activation::Identity}, 9);
  PruneConfig one_shot = make_config(CriterionKind::MP, 0.7, 1, Schedule::Exponential);
  PruneConfig iterative = make_config(CriterionKind::MP, 0.7, 10, Schedule::Exponential);
  auto [m1, t1] = run_pruning(net, ds, one_shot);
  auto [m10, t10] = run_pruning(net, ds, iterative);
  CHECK(m1.bits() == m10.bits());
}

TEST_CASE("trace CSV round-trips through disk") {
  PruneTrace trace;
  trace.base_loss = 2.5;
  trace.rows = {{1, 0.5, 1.25, 2.6, 0.1}, {2, 0.9, 0.75, 2.9, 0.4}};
  trace.final_delta_loss = 0.4;
  const auto path =
      (std::filesystem::temp_directory_path() / "prunelab_trace_test.csv").string();
  trace.write_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,kappa_i,step_norm,delta_loss");
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("random masks hit the requested sparsity deterministically") {
  const Mask a = random_mask(1000, 0.9, 5);
  const Mask b = random_mask(1000, 0.9, 5);
  const Mask c = random_mask(1000, 0.9, 6);
  CHECK(a.bits() == b.bits());
  CHECK(a.bits() != c.bits());
  CHECK(a.pruned_count() == 900);
}

TEST_CASE("invalid prune configurations are rejected") {
  PruneConfig cfg = make_config(CriterionKind::MP, 1.5, 1, Schedule::Linear);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.kappa = 0.5;
  cfg.pi = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.pi = 1;
  cfg.saliency_sample_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("schedule string round trip") {
  CHECK(schedule_from_string("linear") == Schedule::Linear);
  CHECK(schedule_from_string("exponential") == Schedule::Exponential);
  CHECK(schedule_from_string("exp") == Schedule::Exponential);
  CHECK(to_string(Schedule::Linear) == "linear");
  CHECK(to_string(Schedule::Exponential) == "exponential");
  CHECK_THROWS_AS(schedule_from_string("cosine"), std::invalid_argument);
}

TEST_CASE("checkpoints round-trip networks and masks") {
  Network net = Network::glorot_init({5, 7, 3}, {Activation::Tanh, Activation::Identity}, 15);
  const Mask mask = random_mask(net.param_count(), 0.4, 2);
  const auto dir = std::filesystem::temp_directory_path() / "prunelab_ckpt_test";
  std::filesystem::create_directories(dir);

  const std::string with_mask = (dir / "a.ckpt").string();
  save_checkpoint(net, &mask, with_mask);
  const Checkpoint a = load_checkpoint(with_mask);
  CHECK(a.net.params() == net.params());
  REQUIRE(a.mask.has_value());
  CHECK(a.mask->bits() == mask.bits());
  REQUIRE(a.net.layers().size() == 2);
  CHECK(a.net.layers()[0].act == Activation::Tanh);
  CHECK(a.net.layers()[1].act == Activation::Identity);

  const std::string without_mask = (dir / "b.ckpt").string();
  save_checkpoint(net, nullptr, without_mask);
  const Checkpoint b = load_checkpoint(without_mask);
  CHECK(b.net.params() == net.params());
  CHECK(!b.mask.has_value());

  // corrupt magic
  {
    std::fstream f(with_mask, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  CHECK_THROWS(load_checkpoint(with_mask));
}
