#pragma once

#include "prunelab/network.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace prunelab {

/// Thrown on malformed or truncated dataset files.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  RowMatrix inputs;        // N x d, values in [0, 1]
  std::vector<int> labels; // class indices
  int num_classes = 0;
  std::string name;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }

  Batch as_batch() const { return Batch{inputs, labels}; }
};

struct SplitSpec {
  Eigen::Index n_holdout = 0;
  std::uint64_t seed = 0;
};

/// Loads an IDX image/label file pair (big-endian; magic 0x00000803 for
/// images, 0x00000801 for labels). Pixels are scaled to [0, 1] by /255.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Writes a dataset back out as an IDX pair; inputs are quantized to bytes.
/// Only square images (dim = side*side) are supported.
void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path);

/// Deterministic (train, holdout) partition; the permutation depends only on the seed.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

/// k Gaussian clusters with unit covariance, means on a scaled simplex
/// (scale * e_c for class c). Inputs are affinely mapped into [0, 1].
Dataset synthetic_gaussian_mixture(Eigen::Index n, Eigen::Index d, int k_classes,
                                   std::uint64_t seed, double mean_scale = 6.0);

/// Copy of `ds` with floor(fraction * n) labels reassigned to a uniformly
/// random different class, deterministically per seed. Keeps the optimal
/// predictor's confidence bounded, which synthetic data otherwise lacks.
Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed);

/// Deterministic mini-batch stream. Each epoch's permutation is a pure
/// function of (seed, epoch); the final short batch is kept.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, Eigen::Index batch_size, std::uint64_t seed, bool shuffle);

  Eigen::Index batches_per_epoch() const;
  std::vector<Eigen::Index> epoch_permutation(int epoch) const;
  Batch get(int epoch, Eigen::Index batch_index) const;

 private:
  const Dataset* ds_;
  Eigen::Index batch_size_;
  std::uint64_t seed_;
  bool shuffle_;
};

/// n examples drawn without replacement, deterministically per seed.
Batch sample_without_replacement(const Dataset& ds, Eigen::Index n, std::uint64_t seed);

/// Stable 64-bit mix used wherever two seed components need combining.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace prunelab
