#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "semcont/nn.hpp"
#include "semcont/tensor.hpp"

namespace semcont {

/// The differentiable image classifier surface the evaluation-side modules
/// consume: forward logits, input gradients, and named spatial activations.
class Classifier {
public:
  virtual ~Classifier() = default;

  virtual int num_classes() const = 0;
  virtual std::array<int64_t, 3> input_dims() const = 0;  // C, H, W

  /// Row i = logits of image i. Deterministic for fixed parameters.
  virtual LogitsMatrix logits(const ImageBatch& x) const = 0;

  /// d(mean cross-entropy)/dx. Optionally also returns the logits.
  virtual ImageBatch ce_input_gradient(const ImageBatch& x, const std::vector<int>& labels,
                                       LogitsMatrix* logits_out = nullptr) const = 0;

  /// d(sum over batch of logits[target])/dx.
  virtual ImageBatch target_input_gradient(const ImageBatch& x, int target,
                                           LogitsMatrix* logits_out = nullptr) const = 0;

  /// Names of spatial activations usable by attribution methods.
  virtual std::vector<std::string> activation_names() const = 0;

  /// Forward activation at `layer` plus d(logits[target])/d(activation)
  /// for a single image (batch of one).
  virtual void activation_and_gradient(const ImageBatch& x, int target, const std::string& layer,
                                       Tensor<float>* activation,
                                       Tensor<float>* grad) const = 0;
};

/// A Net<float> with architecture metadata, implementing Classifier and
/// binary checkpoint round-trips.
class Model final : public Classifier {
public:
  Model() = default;
  Model(std::string arch, int in_channels, int in_side, int num_classes, uint64_t init_seed);

  const std::string& arch() const { return arch_; }
  Net<float>& net() { return net_; }
  const Net<float>& net() const { return net_; }

  int num_classes() const override { return num_classes_; }
  std::array<int64_t, 3> input_dims() const override {
    return {in_channels_, in_side_, in_side_};
  }

  LogitsMatrix logits(const ImageBatch& x) const override;
  ImageBatch ce_input_gradient(const ImageBatch& x, const std::vector<int>& labels,
                               LogitsMatrix* logits_out = nullptr) const override;
  ImageBatch target_input_gradient(const ImageBatch& x, int target,
                                   LogitsMatrix* logits_out = nullptr) const override;
  std::vector<std::string> activation_names() const override;
  void activation_and_gradient(const ImageBatch& x, int target, const std::string& layer,
                               Tensor<float>* activation, Tensor<float>* grad) const override;

  /// Name of the last spatial convolution (default attribution layer).
  std::string last_conv_name() const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);

  /// Same trunk, freshly initialized classification head for a new class
  /// count (used by transfer fine-tuning).
  Model with_new_head(int num_classes, uint64_t init_seed) const;

  void check_batch(const ImageBatch& x) const;

private:
  std::string arch_;
  int in_channels_ = 0, in_side_ = 0, num_classes_ = 0;
  Net<float> net_;
};

/// Architectures: "mlp16" (tiny two-layer test net), "cnn_s", "cnn_m".
template <typename T>
Net<T> build_net(const std::string& arch, int in_channels, int in_side, int num_classes,
                 uint64_t seed);

uint64_t file_fnv1a(const std::string& path);

}  // namespace semcont
