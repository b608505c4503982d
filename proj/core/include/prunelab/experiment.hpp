#pragma once

#include "prunelab/dataset.hpp"
#include "prunelab/metrics.hpp"
#include "prunelab/pruner.hpp"
#include "prunelab/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace prunelab {

/// Cartesian sweep over criteria x lambdas x pis x schedules x seeds, plus the
/// base training configuration and the pruning template shared by all points.
/// Criterion name "random" selects the random-mask control.
struct SweepSpec {
  std::vector<std::string> criteria = {"mp", "obd", "lm", "qm"};
  std::vector<double> lambdas = {0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  std::vector<int> pis = {1};
  std::vector<std::string> schedules = {"exponential"};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::vector<int> hidden_dims = {300, 100};
  TrainConfig train;
  PruneConfig prune;  // criterion/pi/schedule/seed overridden per point
  std::optional<TrainConfig> finetune_override;
  bool finetune = true;

  std::string to_json() const;
  static SweepSpec from_json(const std::string& text);
};

struct ExperimentPoint {
  std::string criterion;
  double lambda = 0.0;
  int pi = 1;
  std::string schedule = "exponential";
  std::uint64_t seed = 0;
};

/// Deterministic enumeration of the sweep's cartesian product. MP is
/// lambda-invariant rank-wise, but the full product is kept so aggregates stay
/// uniform across criteria.
std::vector<ExperimentPoint> enumerate_points(const SweepSpec& spec);

/// Runs sweep points against a fixed (train, val) split, caching trained base
/// networks on disk keyed by (architecture, train config, seed).
class ExperimentRunner {
 public:
  ExperimentRunner(SweepSpec spec, Dataset train_ds, Dataset val_ds, std::string cache_dir);

  /// Trains (or loads from cache) the base network for a seed.
  Network base_network(std::uint64_t seed) const;

  ExperimentRecord run_experiment(const ExperimentPoint& point) const;

  /// Executes all points on a bounded worker pool; results come back in
  /// enumeration order regardless of completion order.
  std::vector<ExperimentRecord> run_sweep(int workers = 1) const;

  const Dataset& train_data() const { return train_ds_; }
  const Dataset& val_data() const { return val_ds_; }
  const SweepSpec& spec() const { return spec_; }

 private:
  std::string base_cache_path(std::uint64_t seed) const;

  SweepSpec spec_;
  Dataset train_ds_;
  Dataset val_ds_;
  std::string cache_dir_;
};

/// Aggregate per (criterion, lambda, pi, schedule): mean and std of delta_loss
/// over seeds.
struct SweepAggregate {
  std::string criterion;
  double lambda = 0.0;
  int pi = 1;
  std::string schedule;
  double mean_delta_loss = 0.0;
  double std_delta_loss = 0.0;
  double mean_gap_after_finetune = 0.0;
  int n = 0;
};

std::vector<SweepAggregate> aggregate(const std::vector<ExperimentRecord>& records);

/// Figure-ready CSV views: "fig1" (per-configuration delta-loss mean/std) and
/// "fig3" (delta-loss vs post-finetune gap scatter with a Spearman rho summary
/// row). Throws on unknown view names. "trace" and "curves" views are written
/// directly by PruneTrace::write_csv and TrainHistory::write_csv.
void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& view,
              const std::string& path);

}  // namespace prunelab
