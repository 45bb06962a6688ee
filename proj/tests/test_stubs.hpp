#pragma once

// Closed-form classifier stubs and small helpers shared across test suites.

#include <vector>

#include "semcont/classifier.hpp"
#include "semcont/nn.hpp"
#include "semcont/rng.hpp"

namespace semcont::testing {

/// F(x) = W * flatten(x): everything about this model is hand-computable.
class LinearClassifier final : public Classifier {
public:
  LinearClassifier(std::vector<std::vector<float>> w, int64_t c, int64_t side)
      : w_(std::move(w)), c_(c), side_(side) {}

  int num_classes() const override { return static_cast<int>(w_.size()); }
  std::array<int64_t, 3> input_dims() const override { return {c_, side_, side_}; }

  LogitsMatrix logits(const ImageBatch& x) const override {
    const int64_t n = x.dim(0), d = x.size() / n;
    const int64_t k = static_cast<int64_t>(w_.size());
    LogitsMatrix out({n, k});
    for (int64_t i = 0; i < n; ++i)
      for (int64_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (int64_t j = 0; j < d; ++j)
          acc += static_cast<double>(w_[static_cast<size_t>(c)][static_cast<size_t>(j)]) *
                 x[i * d + j];
        out[i * k + c] = static_cast<float>(acc);
      }
    return out;
  }

  ImageBatch ce_input_gradient(const ImageBatch& x, const std::vector<int>& labels,
                               LogitsMatrix* logits_out) const override {
    LogitsMatrix lg = logits(x);
    auto ce = softmax_cross_entropy(lg, labels);
    if (logits_out) *logits_out = lg;
    const int64_t n = x.dim(0), d = x.size() / n, k = lg.dim(1);
    ImageBatch g(x.shape());
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int64_t c = 0; c < k; ++c)
          acc += static_cast<double>(ce.dlogits[i * k + c]) *
                 w_[static_cast<size_t>(c)][static_cast<size_t>(j)];
        g[i * d + j] = static_cast<float>(acc);
      }
    return g;
  }

  ImageBatch target_input_gradient(const ImageBatch& x, int target,
                                   LogitsMatrix* logits_out) const override {
    if (logits_out) *logits_out = logits(x);
    const int64_t n = x.dim(0), d = x.size() / n;
    ImageBatch g(x.shape());
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < d; ++j)
        g[i * d + j] = w_[static_cast<size_t>(target)][static_cast<size_t>(j)];
    return g;
  }

  std::vector<std::string> activation_names() const override { return {}; }
  void activation_and_gradient(const ImageBatch&, int, const std::string&, Tensor<float>*,
                               Tensor<float>*) const override {
    throw std::runtime_error("linear stub has no named activations");
  }

private:
  std::vector<std::vector<float>> w_;
  int64_t c_, side_;
};

/// Logits are the same constant vector for every input.
class ConstantClassifier final : public Classifier {
public:
  ConstantClassifier(std::vector<float> logits_row, int64_t c, int64_t side)
      : row_(std::move(logits_row)), c_(c), side_(side) {}

  int num_classes() const override { return static_cast<int>(row_.size()); }
  std::array<int64_t, 3> input_dims() const override { return {c_, side_, side_}; }

  LogitsMatrix logits(const ImageBatch& x) const override {
    const int64_t n = x.dim(0), k = static_cast<int64_t>(row_.size());
    LogitsMatrix out({n, k});
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < k; ++j) out[i * k + j] = row_[static_cast<size_t>(j)];
    return out;
  }

  ImageBatch ce_input_gradient(const ImageBatch& x, const std::vector<int>&,
                               LogitsMatrix* logits_out) const override {
    if (logits_out) *logits_out = logits(x);
    return ImageBatch(x.shape());
  }
  ImageBatch target_input_gradient(const ImageBatch& x, int,
                                   LogitsMatrix* logits_out) const override {
    if (logits_out) *logits_out = logits(x);
    return ImageBatch(x.shape());
  }
  std::vector<std::string> activation_names() const override { return {}; }
  void activation_and_gradient(const ImageBatch&, int, const std::string&, Tensor<float>*,
                               Tensor<float>*) const override {
    throw std::runtime_error("constant stub has no named activations");
  }

private:
  std::vector<float> row_;
  int64_t c_, side_;
};

inline ImageBatch random_images(std::vector<int64_t> shape, uint64_t seed) {
  ImageBatch x(std::move(shape));
  Rng rng(seed);
  for (int64_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform());
  return x;
}

inline std::vector<int> random_labels(int64_t n, int k, uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(static_cast<size_t>(n));
  for (auto& v : y) v = static_cast<int>(rng.uniform_int(k));
  return y;
}

}  // namespace semcont::testing
