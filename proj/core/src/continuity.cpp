#include "semcont/continuity.hpp"

namespace semcont {

double continuity_loss(const Classifier& model, const ImageBatch& x, const ImageBatch& xp) {
  if (!x.same_shape(xp))
    throw std::invalid_argument("continuity_loss: image pair shape mismatch");
  LogitsMatrix fx = model.logits(x);
  LogitsMatrix fxp = model.logits(xp);
  auto ds = distance_score_rows(fx, fxp);
  double mean = 0.0;
  for (float v : ds) mean += v;
  return ds.empty() ? 0.0 : mean / static_cast<double>(ds.size());
}

LossBreakdown total_loss(double base, double continuity, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("total_loss: negative alpha");
  LossBreakdown b;
  b.base = base;
  b.continuity = continuity;
  b.alpha = alpha;
  b.total = base + alpha * continuity;
  return b;
}

}  // namespace semcont
