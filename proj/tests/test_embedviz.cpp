#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <limits>
#include <unistd.h>

#include "semcont/continuity.hpp"
#include "semcont/embedviz.hpp"
#include "semcont/trainer.hpp"
#include "test_stubs.hpp"

using namespace semcont;
using semcont::testing::ConstantClassifier;
using semcont::testing::random_images;
using semcont::testing::random_labels;

namespace fs = std::filesystem;

TEST_CASE("extract_logits shape, determinism and duplicate rows") {
  Model m("cnn_s", 3, 16, 10, 1);
  ImageBatch batch = random_images({55, 3, 16, 16}, 2);
  // duplicate one image
  const int64_t stride = 3 * 16 * 16;
  std::copy(batch.data(), batch.data() + stride, batch.data() + 7 * stride);

  LogitsMatrix lg = extract_logits(m, batch);
  REQUIRE(lg.shape() == std::vector<int64_t>{55, 10});
  for (int64_t j = 0; j < 10; ++j) CHECK(lg[0 * 10 + j] == lg[7 * 10 + j]);
  for (int64_t i = 0; i < lg.size(); ++i) CHECK(std::isfinite(lg[i]));
}

TEST_CASE("neighbor report on a constant model has zero violations") {
  ConstantClassifier model(std::vector<float>(10, 0.5f), 3, 16);
  LabeledDataset ds;
  ds.name = "t";
  ds.split = "test";
  ds.num_classes = 10;
  ds.images = random_images({60, 3, 16, 16}, 3);
  ds.labels = random_labels(60, 10, 4);

  int found_class = -1;
  for (int k = 0; k < 10; ++k) {
    int cnt = 0;
    for (int l : ds.labels) cnt += (l == k);
    if (cnt >= 2) {
      found_class = k;
      break;
    }
  }
  REQUIRE(found_class >= 0);
  NeighborReport rep = neighbor_discontinuity_report(model, ds, found_class, 1, 5);
  CHECK(rep.augmented_pair_ds == 0.0);
  CHECK(rep.violation_count == 0);
  CHECK(rep.violation_fraction == 0.0);
}

TEST_CASE("neighbor report matches a brute-force recount") {
  Model model("cnn_s", 3, 16, 6, 5);
  LabeledDataset ds;
  ds.name = "t";
  ds.split = "test";
  ds.num_classes = 6;
  ds.images = random_images({80, 3, 16, 16}, 6);
  ds.labels = random_labels(80, 6, 7);

  NeighborReport rep = neighbor_discontinuity_report(model, ds, 2, 1, 99);

  // recompute every same-class pair distance from scratch
  LogitsMatrix all = extract_logits(model, ds.images);
  std::vector<float> fa(all.data() + rep.anchor_index * 6, all.data() + (rep.anchor_index + 1) * 6);
  int64_t violations = 0, candidates = 0;
  double min_ds = std::numeric_limits<double>::infinity();
  int64_t min_idx = -1;
  for (int64_t i = 0; i < ds.count(); ++i) {
    if (ds.labels[static_cast<size_t>(i)] != 2 || i == rep.anchor_index) continue;
    ++candidates;
    std::vector<float> fb(all.data() + i * 6, all.data() + (i + 1) * 6);
    const double d = distance_score(fa, fb);
    if (d < rep.augmented_pair_ds) ++violations;
    if (d < min_ds) {
      min_ds = d;
      min_idx = i;
    }
  }
  CHECK(rep.class_size == candidates);
  CHECK(rep.violation_count == violations);  // exact agreement with brute force
  CHECK(rep.min_ds_index == min_idx);
  CHECK(rep.violation_fraction ==
        doctest::Approx(static_cast<double>(violations) / candidates));
  CHECK(ds.labels[static_cast<size_t>(rep.anchor_index)] == 2);
}

TEST_CASE("pca embedding of planar data preserves total variance") {
  // rows live on a 2-D plane in 6-D space
  Rng rng(8);
  Eigen::VectorXd u(6), v(6);
  for (int j = 0; j < 6; ++j) {
    u(j) = rng.uniform(-1, 1);
    v(j) = rng.uniform(-1, 1);
  }
  const int n = 40;
  LogitsMatrix lg({n, 6});
  for (int i = 0; i < n; ++i) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    for (int j = 0; j < 6; ++j)
      lg[i * 6 + j] = static_cast<float>(a * u(j) + b * v(j) + 0.5);
  }
  Tensor<double> xy = pca_embed(lg, 2);

  // total variance of the embedding equals that of the centered input
  Eigen::MatrixXd X(n, 6);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 6; ++j) X(i, j) = lg[i * 6 + j];
  X.rowwise() -= Eigen::RowVectorXd(X.colwise().mean());
  const double var_in = X.squaredNorm();
  double var_out = 0.0;
  for (int64_t i = 0; i < xy.size(); ++i) var_out += static_cast<double>(xy[i]) * xy[i];
  CHECK(var_out == doctest::Approx(var_in).epsilon(1e-6));

  // embedding with fewer dims can only lose variance
  Tensor<double> one = pca_embed(lg, 1);
  double var_one = 0.0;
  for (int64_t i = 0; i < one.size(); ++i) var_one += static_cast<double>(one[i]) * one[i];
  CHECK(var_one <= var_out + 1e-9);
}

TEST_CASE("pca embedding: duplicates, translation invariance, sign convention") {
  Rng rng(9);
  LogitsMatrix lg({20, 5});
  for (int64_t i = 0; i < lg.size(); ++i) lg[i] = static_cast<float>(rng.uniform(-1, 1));
  // duplicate row 3 into row 11
  for (int64_t j = 0; j < 5; ++j) lg[11 * 5 + j] = lg[3 * 5 + j];

  Tensor<double> a = pca_embed(lg, 2);
  CHECK(a[3 * 2 + 0] == a[11 * 2 + 0]);
  CHECK(a[3 * 2 + 1] == a[11 * 2 + 1]);

  LogitsMatrix shifted = lg;
  for (int64_t i = 0; i < 20; ++i)
    for (int64_t j = 0; j < 5; ++j) shifted[i * 5 + j] += 3.25f;
  Tensor<double> b = pca_embed(shifted, 2);
  for (int64_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-4);

  // with exact-arithmetic (double) inputs the invariance is tight
  Tensor<double> dl({20, 5});
  for (int64_t i = 0; i < dl.size(); ++i) dl[i] = static_cast<double>(lg[i]);
  Tensor<double> dshift = dl;
  for (int64_t i = 0; i < dshift.size(); ++i) dshift[i] += 3.25;
  Tensor<double> da = pca_embed(dl, 2), db = pca_embed(dshift, 2);
  for (int64_t i = 0; i < da.size(); ++i) CHECK(std::abs(da[i] - db[i]) < 1e-8);

  // largest-magnitude coordinate of each axis is positive
  for (int d = 0; d < 2; ++d) {
    double best = 0.0;
    for (int64_t i = 0; i < 20; ++i)
      if (std::abs(a[i * 2 + d]) > std::abs(best)) best = a[i * 2 + d];
    CHECK(best > 0.0);
  }

  CHECK_THROWS(pca_embed(lg, 6));
  CHECK_THROWS(pca_embed(LogitsMatrix({1, 5}), 1));
}

TEST_CASE("rank-deficient trailing axes embed as zeros") {
  // all rows identical along a line: rank 1
  LogitsMatrix lg({10, 4});
  Rng rng(10);
  for (int64_t i = 0; i < 10; ++i) {
    const float t = static_cast<float>(rng.uniform(-1, 1));
    for (int64_t j = 0; j < 4; ++j) lg[i * 4 + j] = t * static_cast<float>(j + 1);
  }
  Tensor<double> xy = pca_embed(lg, 3);
  for (int64_t i = 0; i < 10; ++i) {
    CHECK(xy[i * 3 + 1] == 0.0);
    CHECK(xy[i * 3 + 2] == 0.0);
  }
}

TEST_CASE("embed_visualize_set renders deterministically") {
  const fs::path dir = fs::temp_directory_path() / ("semcont_viz_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  Model m("cnn_s", 3, 16, 5, 11);
  LabeledDataset ds;
  ds.name = "t";
  ds.split = "train";
  ds.num_classes = 5;
  ds.images = random_images({40, 3, 16, 16}, 12);
  ds.labels = random_labels(40, 5, 13);
  int cls = -1;
  for (int k = 0; k < 5; ++k) {
    int cnt = 0;
    for (int l : ds.labels) cnt += (l == k);
    if (cnt >= 3) {
      cls = k;
      break;
    }
  }
  REQUIRE(cls >= 0);
  VisualizeSet vs = make_visualize_set(ds, cls, 3);

  const std::string p1 = (dir / "a.png").string(), p2 = (dir / "b.png").string();
  embed_visualize_set(m, vs, p1);
  embed_visualize_set(m, vs, p2);
  CHECK(file_fnv1a(p1) == file_fnv1a(p2));
  CHECK(fs::file_size(p1) > 0);
  fs::remove_all(dir);
}
