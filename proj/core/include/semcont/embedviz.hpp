#pragma once

#include <cstdint>
#include <string>

#include "semcont/classifier.hpp"
#include "semcont/datasets.hpp"
#include "semcont/tensor.hpp"

namespace semcont {

/// Batch logits; evaluation mode, rows aligned with the batch.
LogitsMatrix extract_logits(const Classifier& model, const ImageBatch& batch);

/// Evidence record for one anchor: how many same-class images sit closer
/// (in DS) to the anchor than its own augmented twin does.
struct NeighborReport {
  int64_t anchor_index = -1;
  int class_id = 0;
  int level = 1;
  double augmented_pair_ds = 0.0;
  int64_t class_size = 0;        // same-class candidates excluding the anchor
  int64_t violation_count = 0;   // x_B with DS(x_A, x_B) < DS(x_A, x_A')
  double violation_fraction = 0.0;
  int64_t min_ds_index = -1;     // the x_B minimizing DS(x_A, x_B)
  double min_ds = 0.0;

  std::string to_json() const;
};

NeighborReport neighbor_discontinuity_report(const Classifier& model, const LabeledDataset& data,
                                             int class_id, int level, uint64_t seed);

/// Mean-centered projection onto the top principal axes, eigenvalues in
/// descending order. Sign convention: the largest-magnitude coordinate of
/// each axis is positive. Axes beyond the data rank embed as zeros.
/// Projections are computed and returned in double precision.
template <typename T>
Tensor<double> pca_embed(const Tensor<T>& logits, int dims);

extern template Tensor<double> pca_embed<float>(const Tensor<float>&, int);
extern template Tensor<double> pca_embed<double>(const Tensor<double>&, int);

/// Scatter plot of the 2-D PCA embedding of the visualization set, with
/// role-coded markers.
void embed_visualize_set(const Classifier& model, const VisualizeSet& vis,
                         const std::string& out_path);

}  // namespace semcont
