#pragma once

#include <string>

#include "semcont/classifier.hpp"
#include "semcont/tensor.hpp"

namespace semcont {

enum class AttributionMethod { integrated_gradients, gradcam };

/// Per-pixel attribution at input spatial resolution (channel-reduced).
/// GradCAM values are nonnegative and max-normalized to [0,1].
struct AttributionMap {
  Tensor<float> values;  // [H, W]
  int target_class = 0;
  AttributionMethod method = AttributionMethod::integrated_gradients;
};

/// Path-integrated gradients from `baseline` to `x` (right Riemann sum,
/// `steps` points). The attributions sum to F_t(x) - F_t(baseline) up to
/// integration error; exact for linear models.
AttributionMap integrated_gradients(const Classifier& model, const ImageBatch& x, int target,
                                    const ImageBatch& baseline, int steps);

/// Convenience: black-image baseline.
AttributionMap integrated_gradients(const Classifier& model, const ImageBatch& x, int target,
                                    int steps = 256);

/// Completeness residual |sum(A) - (F_t(x) - F_t(b))|.
double ig_completeness_residual(const Classifier& model, const AttributionMap& map,
                                const ImageBatch& x, const ImageBatch& baseline);

/// Pooled-gradient weighting of a spatial activation, ReLU-rectified,
/// bilinearly upsampled to input size and max-normalized (an all-zero map
/// stays zero). `layer` empty selects the model's last convolution.
AttributionMap gradcam(const Classifier& model, const ImageBatch& x, int target,
                       const std::string& layer = "");

/// Writes original | heatmap | blended overlay side by side (panels scaled
/// up for small inputs). Deterministic bytes for fixed inputs.
void render_overlay(const ImageBatch& x, const AttributionMap& map, const std::string& out_path);

}  // namespace semcont
