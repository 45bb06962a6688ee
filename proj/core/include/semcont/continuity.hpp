#pragma once

#include <vector>

#include "semcont/classifier.hpp"
#include "semcont/nn.hpp"
#include "semcont/tensor.hpp"

namespace semcont {

/// Elementwise logits difference of a pair: F(x') - F(x).
template <typename T>
std::vector<T> logits_difference(const std::vector<T>& fx, const std::vector<T>& fxp) {
  if (fx.size() != fxp.size())
    throw std::invalid_argument("logits_difference: length mismatch");
  std::vector<T> d(fx.size());
  for (size_t i = 0; i < fx.size(); ++i) d[i] = fxp[i] - fx[i];
  return d;
}

/// Squared L2 norm of the logits difference.
template <typename T>
T distance_score(const std::vector<T>& fx, const std::vector<T>& fxp) {
  if (fx.size() != fxp.size()) throw std::invalid_argument("distance_score: length mismatch");
  T s{};
  for (size_t i = 0; i < fx.size(); ++i) {
    const T d = fxp[i] - fx[i];
    s += d * d;
  }
  return s;
}

/// Per-row distance scores for two N×K logits matrices.
template <typename T>
std::vector<T> distance_score_rows(const Tensor<T>& fx, const Tensor<T>& fxp) {
  if (!fx.same_shape(fxp) || fx.rank() != 2)
    throw std::invalid_argument("distance_score_rows: shape mismatch");
  const int64_t n = fx.dim(0), k = fx.dim(1);
  std::vector<T> out(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    T s{};
    for (int64_t j = 0; j < k; ++j) {
      const T d = fxp[i * k + j] - fx[i * k + j];
      s += d * d;
    }
    out[static_cast<size_t>(i)] = s;
  }
  return out;
}

/// Mean distance score between F(x) and F(x') over the batch.
double continuity_loss(const Classifier& model, const ImageBatch& x, const ImageBatch& xp);

struct LossBreakdown {
  double base = 0.0;
  double continuity = 0.0;
  double alpha = 0.0;
  double total = 0.0;
};

/// total = base + alpha * continuity, kept as a breakdown for logging.
LossBreakdown total_loss(double base, double continuity, double alpha);

/// Differentiable mean-DS between two forward branches of one net.
/// Accumulates parameter gradients into pg (through both branches unless
/// stop_gradient_clean, which freezes the x branch). Returns the loss.
template <typename T>
T continuity_loss_grads(const Net<T>& net, const Tensor<T>& x, const Tensor<T>& xp,
                        ParamGrads<T>& pg, bool stop_gradient_clean = false) {
  if (!x.same_shape(xp))
    throw std::invalid_argument("continuity_loss: image pair shape mismatch");
  Trace<T> ta, tb;
  Tensor<T> fa = net.forward(x, ta);
  Tensor<T> fb = net.forward(xp, tb);
  const int64_t n = fa.dim(0), k = fa.dim(1);
  Tensor<T> diff(fa.shape());
  double loss = 0.0;
  for (int64_t i = 0; i < fa.size(); ++i) {
    diff[i] = fb[i] - fa[i];
    loss += static_cast<double>(diff[i]) * static_cast<double>(diff[i]);
  }
  loss /= static_cast<double>(n);
  // d(mean_i ||fb_i - fa_i||^2): +2 diff / n on the x' branch, -2 diff / n on x.
  Tensor<T> db(diff.shape()), da(diff.shape());
  const T scale = static_cast<T>(2.0 / static_cast<double>(n));
  for (int64_t i = 0; i < n * k; ++i) {
    db[i] = scale * diff[i];
    da[i] = -db[i];
  }
  net.backward(tb, db, &pg, false);
  if (!stop_gradient_clean) net.backward(ta, da, &pg, false);
  return static_cast<T>(loss);
}

}  // namespace semcont
