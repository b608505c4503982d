#include "prunelab/dataset.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

using namespace prunelab;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "prunelab_data_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("IDX round trip through save and load") {
  Dataset ds = synthetic_gaussian_mixture(40, 16, 4, 123);
  const auto dir = temp_dir();
  const std::string img = (dir / "imgs.idx").string();
  const std::string lab = (dir / "labs.idx").string();
  save_idx(ds, img, lab);

  const Dataset loaded = load_mnist_idx(img, lab);
  CHECK(loaded.size() == 40);
  CHECK(loaded.dim() == 16);
  CHECK(loaded.labels == ds.labels);
  // quantization to bytes: within half a step
  CHECK((loaded.inputs - ds.inputs).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-12);
  // pixel byte 255 maps back to exactly 1.0
  bool saw_extreme = false;
  for (Eigen::Index i = 0; i < loaded.size() && !saw_extreme; ++i)
    for (Eigen::Index j = 0; j < loaded.dim(); ++j)
      if (loaded.inputs(i, j) == 1.0) saw_extreme = true;
  (void)saw_extreme;  // presence depends on the draw; exact scaling checked below
  Dataset extremes = ds;
  extremes.inputs.setOnes();
  save_idx(extremes, img, lab);
  const Dataset reloaded = load_mnist_idx(img, lab);
  CHECK(reloaded.inputs.minCoeff() == 1.0);
}

TEST_CASE("IDX loader rejects corrupt input") {
  const auto dir = temp_dir();
  const std::string img = (dir / "bad_imgs.idx").string();
  const std::string lab = (dir / "bad_labs.idx").string();
  Dataset ds = synthetic_gaussian_mixture(10, 9, 2, 5);
  save_idx(ds, img, lab);

  SUBCASE("bad magic") {
    std::fstream f(img, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put(char(0xff));
    f.close();
    CHECK_THROWS_AS(load_mnist_idx(img, lab), data_error);
  }
  SUBCASE("truncated image payload") {
    std::filesystem::resize_file(img, std::filesystem::file_size(img) - 5);
    CHECK_THROWS_AS(load_mnist_idx(img, lab), data_error);
  }
  SUBCASE("count mismatch") {
    Dataset fewer = synthetic_gaussian_mixture(8, 9, 2, 5);
    const std::string lab2 = (dir / "fewer_labs.idx").string();
    save_idx(fewer, (dir / "fewer_imgs.idx").string(), lab2);
    CHECK_THROWS_AS(load_mnist_idx(img, lab2), data_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_mnist_idx((dir / "nope.idx").string(), lab), data_error);
  }
}

TEST_CASE("split is a deterministic partition") {
  Dataset ds = synthetic_gaussian_mixture(600, 4, 3, 9);
  // tag each row so indices can be recovered after splitting
  for (Eigen::Index i = 0; i < ds.size(); ++i) ds.inputs(i, 0) = static_cast<double>(i);

  const SplitSpec spec{100, 77};
  auto [train1, val1] = split(ds, spec);
  auto [train2, val2] = split(ds, spec);
  CHECK(train1.size() == 500);
  CHECK(val1.size() == 100);
  CHECK(train1.inputs == train2.inputs);
  CHECK(val1.inputs == val2.inputs);

  std::set<int> seen;
  for (Eigen::Index i = 0; i < train1.size(); ++i)
    seen.insert(static_cast<int>(train1.inputs(i, 0)));
  for (Eigen::Index i = 0; i < val1.size(); ++i)
    seen.insert(static_cast<int>(val1.inputs(i, 0)));
  CHECK(seen.size() == 600);  // exhaustive and disjoint

  CHECK_THROWS_AS(split(ds, SplitSpec{600, 0}), data_error);
  CHECK_THROWS_AS(split(ds, SplitSpec{0, 0}), data_error);
}

TEST_CASE("synthetic mixture determinism and degenerate cases") {
  const Dataset a = synthetic_gaussian_mixture(50, 6, 3, 42);
  const Dataset b = synthetic_gaussian_mixture(50, 6, 3, 42);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);

  const Dataset single = synthetic_gaussian_mixture(20, 6, 1, 42);
  CHECK(std::all_of(single.labels.begin(), single.labels.end(), [](int l) { return l == 0; }));

  CHECK_THROWS_AS(synthetic_gaussian_mixture(0, 6, 1, 42), data_error);
}

TEST_CASE("label flipping changes exactly the requested fraction") {
  const Dataset ds = synthetic_gaussian_mixture(200, 4, 5, 3);
  const Dataset noisy = flip_labels(ds, 0.1, 77);
  const Dataset again = flip_labels(ds, 0.1, 77);
  CHECK(noisy.labels == again.labels);
  CHECK(noisy.inputs == ds.inputs);

  int changed = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (noisy.labels[i] != ds.labels[i]) ++changed;
    CHECK(noisy.labels[i] >= 0);
    CHECK(noisy.labels[i] < 5);
  }
  CHECK(changed == 20);  // every flipped label must actually differ

  const Dataset clean = flip_labels(ds, 0.0, 77);
  CHECK(clean.labels == ds.labels);
  CHECK_THROWS_AS(flip_labels(ds, 1.5, 0), data_error);
  const Dataset single = synthetic_gaussian_mixture(10, 4, 1, 3);
  CHECK_THROWS_AS(flip_labels(single, 0.5, 0), data_error);
}

TEST_CASE("batch stream partitions each epoch") {
  Dataset ds = synthetic_gaussian_mixture(250, 3, 5, 1);
  for (Eigen::Index i = 0; i < ds.size(); ++i) ds.inputs(i, 0) = static_cast<double>(i);

  BatchStream stream(ds, 100, 7, /*shuffle=*/true);
  CHECK(stream.batches_per_epoch() == 3);
  std::vector<Eigen::Index> sizes;
  std::set<int> seen;
  for (Eigen::Index b = 0; b < 3; ++b) {
    const Batch batch = stream.get(0, b);
    sizes.push_back(batch.size());
    for (Eigen::Index i = 0; i < batch.size(); ++i)
      seen.insert(static_cast<int>(batch.inputs(i, 0)));
  }
  CHECK(sizes == std::vector<Eigen::Index>{100, 100, 50});
  CHECK(seen.size() == 250);

  // same (seed, epoch) twice gives the same permutation; epochs differ
  CHECK(stream.epoch_permutation(0) == stream.epoch_permutation(0));
  CHECK(stream.epoch_permutation(0) != stream.epoch_permutation(1));

  BatchStream ordered(ds, 100, 7, /*shuffle=*/false);
  const Batch first = ordered.get(0, 0);
  for (Eigen::Index i = 0; i < first.size(); ++i) CHECK(first.inputs(i, 0) == double(i));
}

TEST_CASE("sampling without replacement is deterministic and duplicate-free") {
  Dataset ds = synthetic_gaussian_mixture(100, 3, 5, 2);
  for (Eigen::Index i = 0; i < ds.size(); ++i) ds.inputs(i, 0) = static_cast<double>(i);
  const Batch s1 = sample_without_replacement(ds, 30, 99);
  const Batch s2 = sample_without_replacement(ds, 30, 99);
  CHECK(s1.inputs == s2.inputs);
  std::set<int> ids;
  for (Eigen::Index i = 0; i < s1.size(); ++i) ids.insert(static_cast<int>(s1.inputs(i, 0)));
  CHECK(ids.size() == 30);
}
