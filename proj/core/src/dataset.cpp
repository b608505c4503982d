#include "prunelab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace prunelab {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the combined words
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path, const char* what) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4))
    throw data_error(path + ": truncated while reading " + what);
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw data_error("cannot open " + images_path);
  const std::uint32_t img_magic = read_be32(img, images_path, "magic");
  if (img_magic != kImageMagic)
    throw data_error(images_path + ": bad image magic " + std::to_string(img_magic));
  const std::uint32_t n = read_be32(img, images_path, "count");
  const std::uint32_t rows = read_be32(img, images_path, "rows");
  const std::uint32_t cols = read_be32(img, images_path, "cols");

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw data_error("cannot open " + labels_path);
  const std::uint32_t lab_magic = read_be32(lab, labels_path, "magic");
  if (lab_magic != kLabelMagic)
    throw data_error(labels_path + ": bad label magic " + std::to_string(lab_magic));
  const std::uint32_t n_lab = read_be32(lab, labels_path, "count");
  if (n != n_lab)
    throw data_error("image count " + std::to_string(n) + " != label count " +
                     std::to_string(n_lab));

  const Eigen::Index d = static_cast<Eigen::Index>(rows) * cols;
  Dataset ds;
  ds.name = images_path;
  ds.inputs.resize(n, d);
  ds.labels.resize(n);

  std::vector<unsigned char> row(d);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(row.data()), d))
      throw data_error(images_path + ": truncated at image " + std::to_string(i));
    for (Eigen::Index j = 0; j < d; ++j) ds.inputs(i, j) = row[j] / 255.0;
    char label;
    if (!lab.read(&label, 1))
      throw data_error(labels_path + ": truncated at label " + std::to_string(i));
    ds.labels[i] = static_cast<unsigned char>(label);
  }
  ds.num_classes = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  return ds;
}

void save_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
  const auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(double(ds.dim()))));
  if (static_cast<Eigen::Index>(side) * side != ds.dim())
    throw data_error("save_idx: input dim " + std::to_string(ds.dim()) + " is not a square");

  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw data_error("cannot write " + images_path);
  write_be32(img, kImageMagic);
  write_be32(img, static_cast<std::uint32_t>(ds.size()));
  write_be32(img, side);
  write_be32(img, side);
  std::vector<unsigned char> row(ds.dim());
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      const double v = std::clamp(ds.inputs(i, j), 0.0, 1.0);
      row[j] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    img.write(reinterpret_cast<const char*>(row.data()), row.size());
  }

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw data_error("cannot write " + labels_path);
  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (int l : ds.labels) {
    const char c = static_cast<char>(l);
    lab.write(&c, 1);
  }
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (spec.n_holdout <= 0 || spec.n_holdout >= ds.size())
    throw data_error("n_holdout " + std::to_string(spec.n_holdout) + " out of range (0, " +
                     std::to_string(ds.size()) + ")");
  std::vector<Eigen::Index> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  auto take = [&](Eigen::Index from, Eigen::Index count, const std::string& suffix) {
    Dataset out;
    out.name = ds.name + suffix;
    out.num_classes = ds.num_classes;
    out.inputs.resize(count, ds.dim());
    out.labels.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      out.inputs.row(i) = ds.inputs.row(idx[from + i]);
      out.labels[i] = ds.labels[idx[from + i]];
    }
    return out;
  };
  Dataset val = take(0, spec.n_holdout, "/holdout");
  Dataset train = take(spec.n_holdout, ds.size() - spec.n_holdout, "/train");
  return {std::move(train), std::move(val)};
}

Dataset synthetic_gaussian_mixture(Eigen::Index n, Eigen::Index d, int k_classes,
                                   std::uint64_t seed, double mean_scale) {
  if (n < 1 || d < 1 || k_classes < 1)
    throw data_error("synthetic_gaussian_mixture: n, d, k must be >= 1");

  // Class means: scaled unit vectors e_{c mod d}, alternating sign past d.
  RowMatrix means = RowMatrix::Zero(k_classes, d);
  for (int c = 0; c < k_classes; ++c)
    means(c, c % d) += (c / d % 2 == 0 ? mean_scale : -mean_scale);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Dataset ds;
  ds.name = "gaussian_mixture";
  ds.num_classes = k_classes;
  ds.inputs.resize(n, d);
  ds.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % k_classes);
    ds.labels[i] = c;
    for (Eigen::Index j = 0; j < d; ++j) ds.inputs(i, j) = means(c, j) + noise(rng);
  }
  // Map into [0, 1] with a fixed affine transform (clamped at +-4 sigma).
  const double lo = -4.0 - mean_scale;
  const double hi = 4.0 + mean_scale;
  ds.inputs = ((ds.inputs.array() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0).matrix();
  return ds;
}

BatchStream::BatchStream(const Dataset& ds, Eigen::Index batch_size, std::uint64_t seed,
                         bool shuffle)
    : ds_(&ds), batch_size_(batch_size), seed_(seed), shuffle_(shuffle) {
  if (batch_size < 1) throw data_error("batch_size must be >= 1");
}

Eigen::Index BatchStream::batches_per_epoch() const {
  return (ds_->size() + batch_size_ - 1) / batch_size_;
}

std::vector<Eigen::Index> BatchStream::epoch_permutation(int epoch) const {
  std::vector<Eigen::Index> idx(ds_->size());
  std::iota(idx.begin(), idx.end(), 0);
  if (shuffle_) {
    std::mt19937_64 rng(mix_seed(seed_, static_cast<std::uint64_t>(epoch)));
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  return idx;
}

Batch BatchStream::get(int epoch, Eigen::Index batch_index) const {
  const auto idx = epoch_permutation(epoch);
  const Eigen::Index from = batch_index * batch_size_;
  if (from < 0 || from >= ds_->size()) throw data_error("batch index out of range");
  const Eigen::Index count = std::min(batch_size_, ds_->size() - from);
  Batch b;
  b.inputs.resize(count, ds_->dim());
  b.targets.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    b.inputs.row(i) = ds_->inputs.row(idx[from + i]);
    b.targets[i] = ds_->labels[idx[from + i]];
  }
  return b;
}

Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) throw data_error("flip fraction must be in [0, 1]");
  if (ds.num_classes < 2 && fraction > 0.0)
    throw data_error("flip_labels needs at least two classes");
  Dataset out = ds;
  const auto count = static_cast<Eigen::Index>(std::floor(fraction * ds.size()));
  if (count == 0) return out;

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, ds.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::uniform_int_distribution<int> offset(1, ds.num_classes - 1);
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::Index row = idx[i];
    out.labels[row] = (out.labels[row] + offset(rng)) % ds.num_classes;
  }
  return out;
}

Batch sample_without_replacement(const Dataset& ds, Eigen::Index n, std::uint64_t seed) {
  if (n < 1 || n > ds.size()) throw data_error("sample size out of range");
  std::vector<Eigen::Index> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: only the first n positions are needed.
  Batch b;
  b.inputs.resize(n, ds.dim());
  b.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, ds.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    b.inputs.row(i) = ds.inputs.row(idx[i]);
    b.targets[i] = ds.labels[idx[i]];
  }
  return b;
}

}  // namespace prunelab
