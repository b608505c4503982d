#pragma once

// Test-only reference implementations, kept independent of the library's
// evaluation path: a straight-line forward evaluator with plain loops, central
// finite differences, and an explicit finite-difference Jacobian.

#include "prunelab/network.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace prunelab::testing {

/// Straight-line forward evaluation of the pre-softmax outputs for a single
/// input, reading the flat parameter vector directly.
inline std::vector<double> oracle_logits(const Network& net, const Mask& mask,
                                         const std::vector<double>& input) {
  std::vector<double> a = input;
  const Eigen::VectorXd& theta = net.params();
  for (const Layer& layer : net.layers()) {
    std::vector<double> z(layer.out);
    for (int o = 0; o < layer.out; ++o) {
      const std::ptrdiff_t bias_idx = layer.offset + layer.weight_count() + o;
      double acc = theta[bias_idx] * mask[bias_idx];
      for (int j = 0; j < layer.in; ++j) {
        const std::ptrdiff_t w_idx = layer.offset + static_cast<std::ptrdiff_t>(o) * layer.in + j;
        acc += theta[w_idx] * mask[w_idx] * a[j];
      }
      switch (layer.act) {
        case Activation::Tanh: z[o] = std::tanh(acc); break;
        case Activation::Relu: z[o] = acc > 0.0 ? acc : 0.0; break;
        case Activation::Identity: z[o] = acc; break;
      }
    }
    a = std::move(z);
  }
  return a;
}

inline std::vector<double> oracle_softmax(const std::vector<double>& logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  std::vector<double> p(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

/// Mean cross-entropy via the oracle evaluator (no probability floor).
inline double oracle_mean_loss(const Network& net, const Mask& mask, const Batch& batch) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    std::vector<double> x(batch.inputs.cols());
    for (Eigen::Index j = 0; j < batch.inputs.cols(); ++j) x[j] = batch.inputs(i, j);
    const auto p = oracle_softmax(oracle_logits(net, mask, x));
    total += -std::log(p[batch.targets[i]]);
  }
  return total / static_cast<double>(batch.size());
}

/// Central finite differences of mean_loss (floor off) in every coordinate.
inline Eigen::VectorXd fd_gradient(const Network& net, const Mask& mask, const Batch& batch,
                                   double h = 1e-5) {
  Network work = net;
  Eigen::VectorXd g(net.param_count());
  for (Eigen::Index i = 0; i < net.param_count(); ++i) {
    const double orig = work.params()[i];
    work.params()[i] = orig + h;
    const double up = mean_loss(work, mask, batch, 0.0);
    work.params()[i] = orig - h;
    const double down = mean_loss(work, mask, batch, 0.0);
    work.params()[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Explicit K x D Jacobian of the pre-softmax outputs for one input, built
/// column by column with central differences.
inline Eigen::MatrixXd fd_jacobian(const Network& net, const Mask& mask,
                                   const Eigen::VectorXd& input, double h = 1e-6) {
  Network work = net;
  const int k = net.output_dim();
  Eigen::MatrixXd jac(k, net.param_count());
  RowMatrix x(1, input.size());
  x.row(0) = input.transpose();
  for (Eigen::Index i = 0; i < net.param_count(); ++i) {
    const double orig = work.params()[i];
    work.params()[i] = orig + h;
    const RowMatrix up = forward_logits(work, mask, x);
    work.params()[i] = orig - h;
    const RowMatrix down = forward_logits(work, mask, x);
    work.params()[i] = orig;
    jac.col(i) = (up.row(0) - down.row(0)).transpose() / (2.0 * h);
  }
  return jac;
}

/// Small random tanh network plus a random batch, deterministic per seed.
struct RandomInstance {
  Network net;
  Batch batch;
};

inline RandomInstance random_instance(std::uint64_t seed, int max_hidden = 8, int max_batch = 8) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim_dist(2, max_hidden);
  std::uniform_int_distribution<int> n_dist(1, max_batch);
  const int d_in = dim_dist(rng);
  const int hidden = dim_dist(rng);
  const int k = dim_dist(rng);
  RandomInstance inst;
  inst.net = Network::glorot_init({d_in, hidden, k}, {Activation::Tanh, Activation::Identity},
                                  rng());
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index i = 0; i < inst.net.param_count(); ++i)
    inst.net.params()[i] += 0.1 * noise(rng);

  const int n = n_dist(rng);
  inst.batch.inputs.resize(n, d_in);
  inst.batch.targets.resize(n);
  std::uniform_int_distribution<int> target_dist(0, k - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d_in; ++j) inst.batch.inputs(i, j) = noise(rng);
    inst.batch.targets[i] = target_dist(rng);
  }
  return inst;
}

inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                 double denom_floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), denom_floor));
  return worst;
}

}  // namespace prunelab::testing
