#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "semcont/explain.hpp"
#include "semcont/plot.hpp"
#include "semcont/png_io.hpp"
#include "semcont/synth.hpp"
#include "semcont/trainer.hpp"
#include "test_stubs.hpp"

using namespace semcont;
using semcont::testing::LinearClassifier;
using semcont::testing::random_images;

namespace fs = std::filesystem;

namespace {

/// Hands back scripted activation/gradient pairs so the weighting and
/// normalization arithmetic can be checked in closed form.
class ScriptedActivations final : public Classifier {
public:
  ScriptedActivations(Tensor<float> act, Tensor<float> grad)
      : act_(std::move(act)), grad_(std::move(grad)) {}

  int num_classes() const override { return 2; }
  std::array<int64_t, 3> input_dims() const override { return {1, 4, 4}; }
  LogitsMatrix logits(const ImageBatch& x) const override {
    return LogitsMatrix({x.dim(0), 2});
  }
  ImageBatch ce_input_gradient(const ImageBatch& x, const std::vector<int>&,
                               LogitsMatrix*) const override {
    return ImageBatch(x.shape());
  }
  ImageBatch target_input_gradient(const ImageBatch& x, int, LogitsMatrix*) const override {
    return ImageBatch(x.shape());
  }
  std::vector<std::string> activation_names() const override { return {"scripted"}; }
  void activation_and_gradient(const ImageBatch&, int, const std::string& layer,
                               Tensor<float>* activation, Tensor<float>* grad) const override {
    if (layer != "scripted") throw std::invalid_argument("unknown layer " + layer);
    if (activation) *activation = act_;
    if (grad) *grad = grad_;
  }

private:
  Tensor<float> act_, grad_;
};

LabeledDataset digits_dataset(int64_t count, const std::string& split) {
  std::vector<uint8_t> pixels;
  std::vector<int64_t> labels;
  synth::digits_28(split, count, pixels, labels);
  LabeledDataset ds;
  ds.name = "mnist";
  ds.split = split;
  ds.num_classes = 10;
  ds.images = ImageBatch({count, 1, 28, 28});
  for (int64_t i = 0; i < ds.images.size(); ++i)
    ds.images[i] = static_cast<float>(pixels[static_cast<size_t>(i)]) / 255.0f;
  ds.labels.assign(labels.begin(), labels.end());
  return ds;
}

}  // namespace

TEST_CASE("integrated gradients: zero path gives zero attributions") {
  LinearClassifier model({{0.5f, 1.0f, -1.0f, 0.25f}, {1.0f, -0.5f, 0.5f, 0.0f}}, 1, 2);
  ImageBatch x = random_images({1, 1, 2, 2}, 1);
  AttributionMap map = integrated_gradients(model, x, 0, x, 16);
  for (int64_t i = 0; i < map.values.size(); ++i) CHECK(map.values[i] == 0.0f);
}

TEST_CASE("integrated gradients are exact on a linear model at any step count") {
  const std::vector<float> w{0.5f, 1.0f, -1.0f, 0.25f};
  LinearClassifier model({w, {0.1f, 0.1f, 0.1f, 0.1f}}, 1, 2);
  ImageBatch x = ImageBatch::from({1, 1, 2, 2}, {0.8f, 0.2f, 0.6f, 0.4f});
  ImageBatch baseline = ImageBatch::from({1, 1, 2, 2}, {0.1f, 0.0f, 0.3f, 0.9f});
  for (int steps : {2, 7, 64}) {
    AttributionMap map = integrated_gradients(model, x, 0, baseline, steps);
    for (int64_t i = 0; i < 4; ++i)
      CHECK(map.values[i] ==
            doctest::Approx(w[static_cast<size_t>(i)] * (x[i] - baseline[i])).epsilon(1e-5));
    CHECK(ig_completeness_residual(model, map, x, baseline) < 1e-6);
  }
  CHECK_THROWS(integrated_gradients(model, x, 0, baseline, 1));
  CHECK_THROWS(integrated_gradients(model, x, 0, ImageBatch({1, 1, 4, 4}), 8));
}

TEST_CASE("integrated gradients completeness on a trained cnn") {
  LabeledDataset tr = digits_dataset(512, "train");
  TrainingRecipe r;
  r.regime = Regime::BASE;
  r.optimizer.epochs = 3;
  r.optimizer.batch_size = 32;
  r.optimizer.learning_rate = 1e-3;
  r.seed = 40;
  Model m = train_fresh(tr, r);

  LabeledDataset te = digits_dataset(8, "test");
  double residual32 = 0.0, residual256 = 0.0, denom = 0.0;
  for (int64_t i = 0; i < te.count(); ++i) {
    ImageBatch x = te.images.item0(i);
    ImageBatch black(x.shape());
    const int target = te.labels[static_cast<size_t>(i)];
    AttributionMap m32 = integrated_gradients(m, x, target, black, 32);
    AttributionMap m256 = integrated_gradients(m, x, target, black, 256);
    residual32 += ig_completeness_residual(m, m32, x, black);
    residual256 += ig_completeness_residual(m, m256, x, black);
    const LogitsMatrix fx = m.logits(x), fb = m.logits(black);
    denom += std::abs(static_cast<double>(fx[target]) - fb[target]);
  }
  CHECK(residual256 / denom < 0.01);
  CHECK(residual256 < residual32);
}

TEST_CASE("gradcam weights channels by the pooled gradient") {
  // one channel, uniform positive gradient: the map is proportional to
  // ReLU(activation) and max-normalizes to [0,1]
  Tensor<float> act({1, 1, 2, 2});
  act[0] = -1.0f;
  act[1] = 0.5f;
  act[2] = 2.0f;
  act[3] = 1.0f;
  Tensor<float> grad({1, 1, 2, 2}, 0.3f);
  ScriptedActivations model(act, grad);
  AttributionMap map = gradcam(model, ImageBatch({1, 1, 4, 4}), 0, "scripted");
  REQUIRE(map.values.shape() == std::vector<int64_t>{4, 4});
  float mx = 0.0f;
  for (int64_t i = 0; i < map.values.size(); ++i) {
    CHECK(map.values[i] >= 0.0f);
    mx = std::max(mx, map.values[i]);
  }
  CHECK(mx == doctest::Approx(1.0f));
  // corners sample the corner activations: ReLU(-1)=0 and ReLU(2)=2 -> 1 after norm
  CHECK(map.values[0] == 0.0f);
  CHECK(map.values[3 * 4 + 0] == doctest::Approx(1.0f));
}

TEST_CASE("gradcam is invariant to positive gradient rescaling") {
  Tensor<float> act = random_images({1, 3, 4, 4}, 2);
  Tensor<float> grad = random_images({1, 3, 4, 4}, 3);
  Tensor<float> grad10 = grad;
  for (int64_t i = 0; i < grad10.size(); ++i) grad10[i] *= 10.0f;

  ScriptedActivations a(act, grad), b(act, grad10);
  AttributionMap ma = gradcam(a, ImageBatch({1, 1, 4, 4}), 0, "scripted");
  AttributionMap mb = gradcam(b, ImageBatch({1, 1, 4, 4}), 0, "scripted");
  for (int64_t i = 0; i < ma.values.size(); ++i)
    CHECK(ma.values[i] == doctest::Approx(mb.values[i]).epsilon(1e-5));
}

TEST_CASE("gradcam zero gradient yields the all-zero map") {
  Tensor<float> act = random_images({1, 2, 3, 3}, 4);
  Tensor<float> grad({1, 2, 3, 3});
  ScriptedActivations model(act, grad);
  AttributionMap map = gradcam(model, ImageBatch({1, 1, 4, 4}), 0, "scripted");
  for (int64_t i = 0; i < map.values.size(); ++i) CHECK(map.values[i] == 0.0f);
}

TEST_CASE("gradcam rejects unknown and non-spatial layers") {
  Model m("cnn_s", 1, 8, 3, 9);
  ImageBatch x = random_images({1, 1, 8, 8}, 5);
  CHECK_THROWS(gradcam(m, x, 0, "missing"));
  CHECK_THROWS(gradcam(m, x, 0, "flatten"));
  CHECK_NOTHROW(gradcam(m, x, 0));  // defaults to the last convolution
}

TEST_CASE("gradcam on a real model is reproducible and normalized") {
  Model m("cnn_s", 3, 16, 4, 10);
  ImageBatch x = random_images({1, 3, 16, 16}, 6);
  AttributionMap a = gradcam(m, x, 1);
  AttributionMap b = gradcam(m, x, 1);
  float mx = 0.0f;
  for (int64_t i = 0; i < a.values.size(); ++i) {
    CHECK(a.values[i] == b.values[i]);
    CHECK(a.values[i] >= 0.0f);
    mx = std::max(mx, a.values[i]);
  }
  CHECK((mx == doctest::Approx(1.0f) || mx == 0.0f));
}

TEST_CASE("render_overlay writes deterministic bytes and handles the zero map") {
  const fs::path dir = fs::temp_directory_path() / ("semcont_overlay_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  ImageBatch x = random_images({1, 3, 16, 16}, 7);
  AttributionMap zero;
  zero.values = Tensor<float>({16, 16});

  const std::string p1 = (dir / "a.png").string(), p2 = (dir / "b.png").string();
  render_overlay(x, zero, p1);
  render_overlay(x, zero, p2);
  CHECK(file_fnv1a(p1) == file_fnv1a(p2));

  // middle panel of a zero map is uniformly the lowest color
  PngImage img = read_png(p1);
  const Rgb low = heat_colormap(0.0);
  const int scale = 8, panel = 16 * scale, gap = 2;
  for (int y = 0; y < img.height; ++y)
    for (int xx = panel + gap; xx < 2 * panel + gap; ++xx) {
      const uint8_t* p = img.pixels.data() + (static_cast<size_t>(y) * img.width + xx) * 3;
      CHECK(p[0] == low.r);
      CHECK(p[1] == low.g);
      CHECK(p[2] == low.b);
    }

  AttributionMap bad;
  bad.values = Tensor<float>({8, 8});
  CHECK_THROWS(render_overlay(x, bad, (dir / "c.png").string()));
  fs::remove_all(dir);
}

TEST_CASE("png round trip") {
  const fs::path dir = fs::temp_directory_path() / ("semcont_png_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  ImageBatch x = random_images({1, 3, 9, 13}, 8);
  const std::string path = (dir / "t.png").string();
  write_png(path, to_png_image(x, 0));
  ImageBatch back = from_png_image(read_png(path));
  REQUIRE(back.shape() == x.shape());
  for (int64_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(back[i] - x[i]) <= 0.5f / 255.0f + 1e-6f);
  fs::remove_all(dir);
}
