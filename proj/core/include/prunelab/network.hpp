#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace prunelab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Thrown when an input, mask or cotangent does not match the network's shapes.
class shape_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when training encounters a non-finite loss or gradient.
class divergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation { Tanh, Relu, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// One dense layer's geometry inside the flat parameter vector.
/// Weights are stored row-major (out x in) at `offset`, followed by `out` biases.
struct Layer {
  int in = 0;
  int out = 0;
  Activation act = Activation::Identity;
  std::ptrdiff_t offset = 0;

  std::ptrdiff_t weight_count() const { return static_cast<std::ptrdiff_t>(in) * out; }
  std::ptrdiff_t param_count() const { return weight_count() + out; }
};

/// Dense feed-forward network over a single flat parameter vector.
///
/// The flat vector is the canonical representation; per-layer weight and bias
/// matrices are Eigen maps into it, so flatten/unflatten is the identity.
class Network {
 public:
  Network() = default;

  /// All parameters zero. `dims` = [d_in, h_1, ..., K]; one activation per layer.
  static Network zeros(const std::vector<int>& dims, const std::vector<Activation>& acts);

  /// Glorot-uniform weights (uniform(-a, a), a = sqrt(6/(fan_in+fan_out))), zero biases.
  static Network glorot_init(const std::vector<int>& dims, const std::vector<Activation>& acts,
                             std::uint64_t seed);

  std::ptrdiff_t param_count() const { return params_.size(); }
  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<Layer>& layers() const { return layers_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Map<const RowMatrix> weight(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  Eigen::Map<RowMatrix> weight(std::size_t layer);
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);

 private:
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;
};

/// Binary keep/drop vector over the flat parameters. 1 = kept, 0 = pruned.
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
  static Mask ones(std::ptrdiff_t d) { return Mask(std::vector<std::uint8_t>(d, 1)); }

  std::ptrdiff_t size() const { return static_cast<std::ptrdiff_t>(bits_.size()); }
  std::uint8_t operator[](std::ptrdiff_t i) const { return bits_[i]; }
  std::vector<std::uint8_t>& bits() { return bits_; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::ptrdiff_t pruned_count() const;
  double sparsity() const;

  /// True when every coordinate pruned in `*this` is also pruned in `other`.
  bool subset_of_pruned(const Mask& other) const;

 private:
  std::vector<std::uint8_t> bits_;
};

/// A mini-batch: n input rows and one class index per row.
struct Batch {
  RowMatrix inputs;          // n x d_in
  std::vector<int> targets;  // class indices, < K

  Eigen::Index size() const { return inputs.rows(); }
};

/// theta with pruned coordinates forced to exactly 0.
Eigen::VectorXd effective_params(const Network& net, const Mask& mask);

/// Forward pass intermediates kept for backpropagation.
struct ForwardCache {
  std::vector<RowMatrix> activations;  // activations[0] = inputs, activations[L] = outputs
  std::vector<RowMatrix> preacts;      // pre-activation of each layer
};

/// Network outputs (pre-softmax) for a batch of inputs, evaluated at theta (x) m.
RowMatrix forward_logits(const Network& net, const Mask& mask, const RowMatrix& inputs,
                         ForwardCache* cache = nullptr);

/// Post-softmax class probabilities; each row sums to 1.
RowMatrix forward(const Network& net, const Mask& mask, const Batch& batch);

RowMatrix softmax_rows(const RowMatrix& logits);

/// Mean cross-entropy over the batch. Reported probabilities are clamped below
/// by `prob_floor` so the value stays finite on heavily pruned networks.
double mean_loss(const Network& net, const Mask& mask, const Batch& batch,
                 double prob_floor = 1e-12);

/// Gradient of mean_loss with respect to the full parameter vector, evaluated
/// at theta (x) m. Coordinates of pruned parameters are NOT zeroed here.
Eigen::VectorXd gradient(const Network& net, const Mask& mask, const Batch& batch);

/// Vector-Jacobian product (df(x)/dtheta)^T v for a single input, where f is
/// the pre-softmax network output. Linear in v.
Eigen::VectorXd backward_with_output_cotangent(const Network& net, const Mask& mask,
                                               const Eigen::VectorXd& input,
                                               const Eigen::VectorXd& v);

/// Shared backward pass: accumulates d(sum_i cotangent_i . f(x_i))/dtheta into
/// `accum`. With `squared` set, accumulates per-example squared gradients
/// instead (the element-wise square of each example's contribution).
void backprop_accumulate(const Network& net, const Eigen::VectorXd& masked_params,
                         const ForwardCache& cache, const RowMatrix& cotangent, bool squared,
                         Eigen::VectorXd& accum);

}  // namespace prunelab
