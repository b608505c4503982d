#pragma once

#include "prunelab/dataset.hpp"
#include "prunelab/network.hpp"

#include <optional>
#include <string>
#include <vector>

namespace prunelab {

struct TrainConfig {
  int epochs = 400;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  Eigen::Index batch_size = 100;
  std::optional<int> lr_drop_every;  // epochs between learning-rate drops
  double lr_drop_factor = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  double train_loss = 0.0;
  double train_error = 0.0;  // percent
  double val_loss = 0.0;
  double val_error = 0.0;    // percent
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;  // index of the minimum val_error row, -1 when empty

  void write_csv(const std::string& path) const;
};

/// One SGD step with momentum and L2 weight decay:
///   v <- momentum * v + (g + weight_decay * theta);  theta <- theta - lr * v
/// Pruned coordinates of theta and v are forced back to exactly 0 afterwards.
/// Throws divergence_error on non-finite gradients.
void sgd_step(Network& net, const Mask& mask, const Batch& batch, Eigen::VectorXd& velocity,
              const TrainConfig& cfg, double lr);

/// Full training loop with per-epoch evaluation and early stopping: returns
/// the network restored to the epoch with the lowest validation error.
std::pair<Network, TrainHistory> train(Network net, const Mask& mask, const Dataset& train_ds,
                                       const Dataset& val_ds, const TrainConfig& cfg);

}  // namespace prunelab
