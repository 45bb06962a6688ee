#include "semcont/explain.hpp"

#include <cmath>

#include "semcont/plot.hpp"

namespace semcont {

namespace {

void require_single(const ImageBatch& x, const char* who) {
  require_images(x, who);
  if (x.dim(0) != 1)
    throw std::invalid_argument(std::string(who) + ": expected a single image (N=1)");
}

}  // namespace

AttributionMap integrated_gradients(const Classifier& model, const ImageBatch& x, int target,
                                    const ImageBatch& baseline, int steps) {
  require_single(x, "integrated_gradients");
  if (!x.same_shape(baseline))
    throw std::invalid_argument("integrated_gradients: baseline shape mismatch");
  if (steps < 2) throw std::invalid_argument("integrated_gradients: steps must be >= 2");
  const int64_t c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t pix = c * h * w;

  Tensor<double> total({pix});
  const int chunk = 64;
  for (int k0 = 1; k0 <= steps; k0 += chunk) {
    const int k1 = std::min(steps, k0 + chunk - 1);
    ImageBatch pts({k1 - k0 + 1, c, h, w});
    for (int k = k0; k <= k1; ++k) {
      const float t = static_cast<float>(k) / static_cast<float>(steps);
      float* dst = pts.data() + static_cast<int64_t>(k - k0) * pix;
      for (int64_t i = 0; i < pix; ++i) dst[i] = baseline[i] + t * (x[i] - baseline[i]);
    }
    ImageBatch g = model.target_input_gradient(pts, target);
    for (int64_t row = 0; row < pts.dim(0); ++row)
      for (int64_t i = 0; i < pix; ++i) total[i] += static_cast<double>(g[row * pix + i]);
  }

  AttributionMap map;
  map.method = AttributionMethod::integrated_gradients;
  map.target_class = target;
  map.values = Tensor<float>({h, w});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t p = 0; p < h * w; ++p) {
      const int64_t i = ch * h * w + p;
      map.values[p] += static_cast<float>((static_cast<double>(x[i]) - baseline[i]) * total[i] /
                                          steps);
    }
  return map;
}

AttributionMap integrated_gradients(const Classifier& model, const ImageBatch& x, int target,
                                    int steps) {
  ImageBatch black(x.shape());
  return integrated_gradients(model, x, target, black, steps);
}

double ig_completeness_residual(const Classifier& model, const AttributionMap& map,
                                const ImageBatch& x, const ImageBatch& baseline) {
  const LogitsMatrix fx = model.logits(x);
  const LogitsMatrix fb = model.logits(baseline);
  const double delta = static_cast<double>(fx[map.target_class]) - fb[map.target_class];
  double sum = 0.0;
  for (int64_t i = 0; i < map.values.size(); ++i) sum += map.values[i];
  return std::abs(sum - delta);
}

AttributionMap gradcam(const Classifier& model, const ImageBatch& x, int target,
                       const std::string& layer) {
  require_single(x, "gradcam");
  std::string name = layer;
  if (name.empty()) {
    const auto* m = dynamic_cast<const Model*>(&model);
    if (!m) throw std::invalid_argument("gradcam: layer name required for this classifier");
    name = m->last_conv_name();
  }
  Tensor<float> act, grad;
  model.activation_and_gradient(x, target, name, &act, &grad);
  if (act.rank() != 4)
    throw std::invalid_argument("gradcam: layer " + name + " is not spatial");
  const int64_t c = act.dim(1), ah = act.dim(2), aw = act.dim(3);

  Tensor<float> small({ah, aw});
  for (int64_t ch = 0; ch < c; ++ch) {
    double wsum = 0.0;
    const float* g = grad.data() + ch * ah * aw;
    for (int64_t p = 0; p < ah * aw; ++p) wsum += g[p];
    const float weight = static_cast<float>(wsum / static_cast<double>(ah * aw));
    const float* a = act.data() + ch * ah * aw;
    for (int64_t p = 0; p < ah * aw; ++p) small[p] += weight * a[p];
  }
  for (int64_t p = 0; p < ah * aw; ++p) small[p] = std::max(0.0f, small[p]);

  const int64_t h = x.dim(2), w = x.dim(3);
  AttributionMap map;
  map.method = AttributionMethod::gradcam;
  map.target_class = target;
  map.values = Tensor<float>({h, w});
  for (int64_t y = 0; y < h; ++y) {
    const double syf = ah == 1 ? 0.0 : (static_cast<double>(y) + 0.5) * ah / h - 0.5;
    const int64_t y0 = std::clamp<int64_t>(static_cast<int64_t>(std::floor(syf)), 0, ah - 1);
    const int64_t y1 = std::min(y0 + 1, ah - 1);
    const double fy = std::clamp(syf - static_cast<double>(y0), 0.0, 1.0);
    for (int64_t xx = 0; xx < w; ++xx) {
      const double sxf = aw == 1 ? 0.0 : (static_cast<double>(xx) + 0.5) * aw / w - 0.5;
      const int64_t x0 = std::clamp<int64_t>(static_cast<int64_t>(std::floor(sxf)), 0, aw - 1);
      const int64_t x1 = std::min(x0 + 1, aw - 1);
      const double fx = std::clamp(sxf - static_cast<double>(x0), 0.0, 1.0);
      map.values[y * w + xx] = static_cast<float>(
          small[y0 * aw + x0] * (1 - fy) * (1 - fx) + small[y0 * aw + x1] * (1 - fy) * fx +
          small[y1 * aw + x0] * fy * (1 - fx) + small[y1 * aw + x1] * fy * fx);
    }
  }
  float mx = 0.0f;
  for (int64_t i = 0; i < map.values.size(); ++i) mx = std::max(mx, map.values[i]);
  if (mx > 0.0f)
    for (int64_t i = 0; i < map.values.size(); ++i) map.values[i] /= mx;
  return map;
}

void render_overlay(const ImageBatch& x, const AttributionMap& map, const std::string& out_path) {
  require_single(x, "render_overlay");
  const int64_t c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (map.values.rank() != 2 || map.values.dim(0) != h || map.values.dim(1) != w)
    throw std::invalid_argument("render_overlay: map/image dimension mismatch");

  float mx = 0.0f;
  for (int64_t i = 0; i < map.values.size(); ++i) mx = std::max(mx, std::abs(map.values[i]));
  const float norm = mx > 0.0f ? 1.0f / mx : 0.0f;

  const int scale = h < 128 ? static_cast<int>((128 + h - 1) / h) : 1;
  const int panel = static_cast<int>(w) * scale, ph = static_cast<int>(h) * scale, gap = 2;
  Canvas cv(3 * panel + 2 * gap, ph, {255, 255, 255});
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t xx = 0; xx < w; ++xx) {
      const auto gray = [&](int64_t ch) {
        return static_cast<uint8_t>(std::lround(std::clamp(x.at4(0, std::min(ch, c - 1), y, xx),
                                                           0.0f, 1.0f) * 255.0f));
      };
      const Rgb orig{gray(0), gray(c == 3 ? 1 : 0), gray(c == 3 ? 2 : 0)};
      const float a = std::abs(map.values[y * w + xx]) * norm;
      const Rgb heat = heat_colormap(a);
      const Rgb blend{static_cast<uint8_t>((orig.r + heat.r) / 2),
                      static_cast<uint8_t>((orig.g + heat.g) / 2),
                      static_cast<uint8_t>((orig.b + heat.b) / 2)};
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx) {
          const int py = static_cast<int>(y) * scale + dy, px = static_cast<int>(xx) * scale + dx;
          cv.set(px, py, orig);
          cv.set(panel + gap + px, py, heat);
          cv.set(2 * (panel + gap) + px, py, blend);
        }
    }
  }
  cv.save(out_path);
}

}  // namespace semcont
