#include "prunelab/network.hpp"

#include <cmath>
#include <random>

namespace prunelab {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + s);
}

namespace {

void check_arch(const std::vector<int>& dims, const std::vector<Activation>& acts) {
  if (dims.size() < 2) throw std::invalid_argument("network needs at least one layer");
  if (acts.size() != dims.size() - 1)
    throw std::invalid_argument("need one activation per layer");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("layer dimensions must be positive");
}

std::vector<Layer> build_layers(const std::vector<int>& dims, const std::vector<Activation>& acts,
                                std::ptrdiff_t& total) {
  std::vector<Layer> layers;
  total = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.act = acts[l];
    layer.offset = total;
    total += layer.param_count();
    layers.push_back(layer);
  }
  return layers;
}

inline void apply_activation(Activation act, RowMatrix& z) {
  switch (act) {
    case Activation::Tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Identity:
      break;
  }
}

// Derivative expressed through the post-activation value a = act(z).
inline RowMatrix activation_deriv_from_output(Activation act, const RowMatrix& a) {
  switch (act) {
    case Activation::Tanh:
      return (1.0 - a.array().square()).matrix();
    case Activation::Relu:
      return (a.array() > 0.0).cast<double>().matrix();
    case Activation::Identity:
      return RowMatrix::Ones(a.rows(), a.cols());
  }
  return RowMatrix::Ones(a.rows(), a.cols());
}

}  // namespace

Network Network::zeros(const std::vector<int>& dims, const std::vector<Activation>& acts) {
  check_arch(dims, acts);
  Network net;
  std::ptrdiff_t total = 0;
  net.layers_ = build_layers(dims, acts, total);
  net.params_ = Eigen::VectorXd::Zero(total);
  return net;
}

Network Network::glorot_init(const std::vector<int>& dims, const std::vector<Activation>& acts,
                             std::uint64_t seed) {
  Network net = zeros(dims, acts);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    const Layer& layer = net.layers_[l];
    const double a = std::sqrt(6.0 / (layer.in + layer.out));
    std::uniform_real_distribution<double> dist(-a, a);
    double* w = net.params_.data() + layer.offset;
    for (std::ptrdiff_t i = 0; i < layer.weight_count(); ++i) w[i] = dist(rng);
    // biases stay 0
  }
  return net;
}

Eigen::Map<const RowMatrix> Network::weight(std::size_t l) const {
  const Layer& layer = layers_[l];
  return {params_.data() + layer.offset, layer.out, layer.in};
}
Eigen::Map<const Eigen::VectorXd> Network::bias(std::size_t l) const {
  const Layer& layer = layers_[l];
  return {params_.data() + layer.offset + layer.weight_count(), layer.out};
}
Eigen::Map<RowMatrix> Network::weight(std::size_t l) {
  const Layer& layer = layers_[l];
  return {params_.data() + layer.offset, layer.out, layer.in};
}
Eigen::Map<Eigen::VectorXd> Network::bias(std::size_t l) {
  const Layer& layer = layers_[l];
  return {params_.data() + layer.offset + layer.weight_count(), layer.out};
}

std::ptrdiff_t Mask::pruned_count() const {
  std::ptrdiff_t pruned = 0;
  for (std::uint8_t b : bits_) pruned += (b == 0);
  return pruned;
}

double Mask::sparsity() const {
  if (bits_.empty()) return 0.0;
  return static_cast<double>(pruned_count()) / static_cast<double>(bits_.size());
}

bool Mask::subset_of_pruned(const Mask& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] == 0 && other.bits_[i] != 0) return false;
  return true;
}

Eigen::VectorXd effective_params(const Network& net, const Mask& mask) {
  if (mask.size() != net.param_count())
    throw shape_error("mask length " + std::to_string(mask.size()) + " != param count " +
                      std::to_string(net.param_count()));
  Eigen::VectorXd masked = net.params();
  for (std::ptrdiff_t i = 0; i < masked.size(); ++i)
    if (mask[i] == 0) masked[i] = 0.0;
  return masked;
}

RowMatrix forward_logits(const Network& net, const Mask& mask, const RowMatrix& inputs,
                         ForwardCache* cache) {
  if (inputs.cols() != net.input_dim())
    throw shape_error("layer 0: expected input width " + std::to_string(net.input_dim()) +
                      ", got " + std::to_string(inputs.cols()));
  const Eigen::VectorXd masked = effective_params(net, mask);

  RowMatrix a = inputs;
  if (cache) {
    cache->activations.clear();
    cache->preacts.clear();
    cache->activations.push_back(a);
  }
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const Layer& layer = net.layers()[l];
    Eigen::Map<const RowMatrix> w(masked.data() + layer.offset, layer.out, layer.in);
    Eigen::Map<const Eigen::VectorXd> b(masked.data() + layer.offset + layer.weight_count(),
                                        layer.out);
    RowMatrix z = a * w.transpose();
    z.rowwise() += b.transpose();
    if (cache) cache->preacts.push_back(z);
    apply_activation(layer.act, z);
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

RowMatrix softmax_rows(const RowMatrix& logits) {
  RowMatrix p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

namespace {

void check_targets(const Batch& batch, int k) {
  if (batch.size() < 1) throw shape_error("batch must contain at least one example");
  if (static_cast<Eigen::Index>(batch.targets.size()) != batch.size())
    throw shape_error("target count " + std::to_string(batch.targets.size()) +
                      " != input rows " + std::to_string(batch.size()));
  for (int t : batch.targets)
    if (t < 0 || t >= k)
      throw shape_error("target class " + std::to_string(t) + " out of range [0, " +
                        std::to_string(k) + ")");
}

}  // namespace

RowMatrix forward(const Network& net, const Mask& mask, const Batch& batch) {
  check_targets(batch, net.output_dim());
  return softmax_rows(forward_logits(net, mask, batch.inputs));
}

double mean_loss(const Network& net, const Mask& mask, const Batch& batch, double prob_floor) {
  check_targets(batch, net.output_dim());
  const RowMatrix logits = forward_logits(net, mask, batch.inputs);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    const double log_p = logits(i, batch.targets[i]) - lse;  // <= 0
    if (prob_floor > 0.0) {
      total += -std::max(log_p, std::log(prob_floor));
    } else {
      total += -log_p;
    }
  }
  return total / static_cast<double>(logits.rows());
}

void backprop_accumulate(const Network& net, const Eigen::VectorXd& masked_params,
                         const ForwardCache& cache, const RowMatrix& cotangent, bool squared,
                         Eigen::VectorXd& accum) {
  const auto& layers = net.layers();
  RowMatrix delta =
      cotangent.cwiseProduct(activation_deriv_from_output(layers.back().act, cache.activations.back()));
  for (std::size_t li = layers.size(); li-- > 0;) {
    const Layer& layer = layers[li];
    const RowMatrix& a_prev = cache.activations[li];
    Eigen::Map<RowMatrix> gw(accum.data() + layer.offset, layer.out, layer.in);
    Eigen::Map<Eigen::VectorXd> gb(accum.data() + layer.offset + layer.weight_count(), layer.out);
    if (squared) {
      gw.noalias() += delta.array().square().matrix().transpose() *
                      a_prev.array().square().matrix();
      gb.noalias() += delta.array().square().matrix().colwise().sum().transpose();
    } else {
      gw.noalias() += delta.transpose() * a_prev;
      gb.noalias() += delta.colwise().sum().transpose();
    }
    if (li > 0) {
      Eigen::Map<const RowMatrix> w(masked_params.data() + layer.offset, layer.out, layer.in);
      delta = (delta * w).cwiseProduct(
          activation_deriv_from_output(layers[li - 1].act, cache.activations[li]));
    }
  }
}

Eigen::VectorXd gradient(const Network& net, const Mask& mask, const Batch& batch) {
  check_targets(batch, net.output_dim());
  ForwardCache cache;
  const RowMatrix logits = forward_logits(net, mask, batch.inputs, &cache);
  RowMatrix cot = softmax_rows(logits);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (Eigen::Index i = 0; i < cot.rows(); ++i) cot(i, batch.targets[i]) -= 1.0;
  cot *= inv_n;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
  const Eigen::VectorXd masked = effective_params(net, mask);
  backprop_accumulate(net, masked, cache, cot, /*squared=*/false, grad);
  return grad;
}

Eigen::VectorXd backward_with_output_cotangent(const Network& net, const Mask& mask,
                                               const Eigen::VectorXd& input,
                                               const Eigen::VectorXd& v) {
  if (v.size() != net.output_dim())
    throw shape_error("cotangent length " + std::to_string(v.size()) + " != output dim " +
                      std::to_string(net.output_dim()));
  ForwardCache cache;
  RowMatrix x(1, input.size());
  x.row(0) = input.transpose();
  forward_logits(net, mask, x, &cache);

  Eigen::VectorXd result = Eigen::VectorXd::Zero(net.param_count());
  const Eigen::VectorXd masked = effective_params(net, mask);
  RowMatrix cot(1, v.size());
  cot.row(0) = v.transpose();
  backprop_accumulate(net, masked, cache, cot, /*squared=*/false, result);
  return result;
}

}  // namespace prunelab
