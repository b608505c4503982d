#pragma once

#include "prunelab/dataset.hpp"
#include "prunelab/loss_model.hpp"
#include "prunelab/network.hpp"

#include <string>
#include <vector>

namespace prunelab {

enum class Schedule { Linear, Exponential };

std::string to_string(Schedule s);
Schedule schedule_from_string(const std::string& s);

struct PruneConfig {
  Criterion criterion;
  double kappa = 0.9885;  // target sparsity
  int pi = 1;             // pruning iterations
  Schedule schedule = Schedule::Exponential;
  Eigen::Index saliency_sample_size = 1000;
  std::uint64_t seed = 0;
  bool trace_full_loss = true;  // evaluate training loss after every iteration

  void validate() const;
};

struct PruneTraceRow {
  int iteration = 0;
  double kappa_i = 0.0;
  double step_norm = 0.0;         // ||delta theta||_2 of this iteration
  double train_loss_after = 0.0;  // NaN when loss tracing is off
  double delta_loss_cumulative = 0.0;
};

struct PruneTrace {
  double base_loss = 0.0;
  std::vector<PruneTraceRow> rows;
  double final_delta_loss = 0.0;
  bool diverged = false;

  double max_step_norm() const;
  void write_csv(const std::string& path) const;
};

/// Sparsity after iteration i (1-based). Linear: i*kappa/pi. Exponential:
/// 1 - (1-kappa)^(i/pi), a constant keep ratio per iteration. Both end at
/// exactly kappa.
double schedule_sparsity(Schedule mode, double kappa, int pi, int i);

/// One pruning step: zeroes exactly round(kappa_i * D) coordinates, the ones
/// with the smallest saliencies (ties by ascending index). Supersets the old
/// pruned set because pruned coordinates carry the sentinel saliency.
Mask prune_iteration(const Network& net, const Mask& mask, const PruneConfig& cfg, int iteration,
                     const LossModelStats& stats);

/// Full iterative pruning loop: per iteration, resample the saliency batch,
/// re-estimate the loss model, and extend the mask.
std::pair<Mask, PruneTrace> run_pruning(const Network& net, const Dataset& train_ds,
                                        const PruneConfig& cfg);

/// Uniformly random mask at the given sparsity (control baseline).
Mask random_mask(std::ptrdiff_t d, double kappa, std::uint64_t seed);

}  // namespace prunelab
