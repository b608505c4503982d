#include "prunelab/trainer.hpp"

#include "prunelab/metrics.hpp"

#include <cmath>
#include <fstream>

namespace prunelab {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
}

void TrainHistory::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "epoch,train_loss,train_err,val_loss,val_err\n";
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    const EpochStats& s = epochs[e];
    out << e << "," << s.train_loss << "," << s.train_error << "," << s.val_loss << ","
        << s.val_error << "\n";
  }
}

void sgd_step(Network& net, const Mask& mask, const Batch& batch, Eigen::VectorXd& velocity,
              const TrainConfig& cfg, double lr) {
  if (velocity.size() != net.param_count())
    throw shape_error("velocity length " + std::to_string(velocity.size()) + " != param count " +
                      std::to_string(net.param_count()));
  const Eigen::VectorXd g = gradient(net, mask, batch);
  if (!g.allFinite()) throw divergence_error("non-finite gradient during SGD step");

  Eigen::VectorXd& theta = net.params();
  velocity = cfg.momentum * velocity + (g + cfg.weight_decay * theta);
  theta -= lr * velocity;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (mask[i] == 0) {
      theta[i] = 0.0;
      velocity[i] = 0.0;
    }
  }
}

std::pair<Network, TrainHistory> train(Network net, const Mask& mask, const Dataset& train_ds,
                                       const Dataset& val_ds, const TrainConfig& cfg) {
  cfg.validate();
  TrainHistory history;
  if (cfg.epochs == 0) return {std::move(net), history};

  BatchStream stream(train_ds, cfg.batch_size, cfg.seed, /*shuffle=*/true);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(net.param_count());

  Network best = net;
  double best_val_error = std::numeric_limits<double>::infinity();
  double lr = cfg.lr;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.lr_drop_every && epoch > 0 && epoch % *cfg.lr_drop_every == 0)
      lr /= cfg.lr_drop_factor;

    for (Eigen::Index b = 0; b < stream.batches_per_epoch(); ++b)
      sgd_step(net, mask, stream.get(epoch, b), velocity, cfg, lr);

    EpochStats stats;
    stats.train_loss = dataset_loss(net, mask, train_ds);
    stats.train_error = error_rate(net, mask, train_ds);
    stats.val_loss = dataset_loss(net, mask, val_ds);
    stats.val_error = error_rate(net, mask, val_ds);
    if (!std::isfinite(stats.train_loss))
      throw divergence_error("non-finite training loss at epoch " + std::to_string(epoch));
    history.epochs.push_back(stats);

    // <= so ties resolve to the latest (most converged) snapshot
    if (stats.val_error <= best_val_error) {
      best_val_error = stats.val_error;
      history.best_epoch = epoch;
      best = net;
    }
  }
  return {std::move(best), std::move(history)};
}

}  // namespace prunelab
