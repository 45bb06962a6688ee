#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semcont/tensor.hpp"

namespace semcont {

struct LabeledDataset {
  ImageBatch images;        // N×C×H×W, values in [0,1]
  std::vector<int> labels;  // in [0, num_classes)
  int num_classes = 0;
  std::string name;
  std::string split;  // "train" | "test"

  int64_t count() const { return images.rank() == 4 ? images.dim(0) : 0; }
  void validate() const;
};

struct ColorfulMnistSpec {
  double train_majority_fraction = 0.95;
  std::array<float, 3> majority_train_color{1.0f, 0.0f, 0.0f};  // red
  std::array<float, 3> minority_train_color{0.0f, 0.0f, 1.0f};  // blue
  uint64_t seed = 0;

  void validate() const;
};

/// Resolves the dataset root: SEMCONT_DATA_DIR, else "data".
std::string data_root();

/// Known dataset ids: mnist, cifar10, cifar100, svhn, colorful_mnist.
bool is_known_dataset(const std::string& name);

/// Loads `root/name/split/{images.npy,labels.npy}`. Throws unknown-name for
/// ids outside the known set and missing-on-disk when not materialized.
LabeledDataset load_dataset(const std::string& name, const std::string& split,
                            const std::string& root = "");

/// Writes a dataset under `root/name/split/` in the portable layout
/// (uint8 NCHW images.npy + int64 labels.npy).
void write_dataset(const LabeledDataset& ds, const std::string& root);

/// Materializes `root/name/`: converts canonical raw files under
/// `root/name/raw/` when present (MNIST IDX, CIFAR-10/100 binaries),
/// otherwise generates the synthetic stand-in at canonical counts.
/// Writes manifest.json recording provenance. `count_override` shrinks
/// per-split counts for quick runs (0 = canonical).
void materialize_dataset(const std::string& name, const std::string& root = "",
                         int64_t count_override = 0);

/// Builds the color-biased digit dataset from base mnist on disk: train
/// backgrounds are majority-colored for round(fraction*N) images (seeded
/// shuffle), the test split swaps the color roles. Writes both splits under
/// `root/colorful_mnist/` and returns them.
std::pair<LabeledDataset, LabeledDataset> build_colorful_mnist(const ColorfulMnistSpec& spec,
                                                               const std::string& root = "");

enum class VisRole : uint8_t { original, augmented, same_class };

struct VisualizeSet {
  ImageBatch images;
  std::vector<VisRole> roles;
  int64_t anchor_index = -1;  // index of x_A within the source dataset
};

/// The neighborhood-visualization set: anchor x_A (seeded uniform draw from
/// the class), x_A under each of the four level-1 augmentations, then every
/// remaining image of the class.
VisualizeSet make_visualize_set(const LabeledDataset& ds, int class_id, uint64_t seed);

/// Seeded random subset without replacement, preserving metadata.
LabeledDataset subset_seeded(const LabeledDataset& ds, int64_t count, uint64_t seed);

}  // namespace semcont
