#include "semcont/embedviz.hpp"

#include <Eigen/Dense>
#include <cmath>

#include <nlohmann/json.hpp>

#include "semcont/continuity.hpp"
#include "semcont/perturb.hpp"
#include "semcont/plot.hpp"
#include "semcont/rng.hpp"

namespace semcont {

LogitsMatrix extract_logits(const Classifier& model, const ImageBatch& batch) {
  require_images(batch, "extract_logits");
  const int64_t n = batch.dim(0);
  LogitsMatrix out({n, model.num_classes()});
  const int64_t bs = 256;
  const int64_t stride = model.num_classes();
  for (int64_t b = 0; b < n; b += bs) {
    const int64_t e = std::min(n, b + bs);
    LogitsMatrix lg = model.logits(batch.slice0(b, e));
    std::copy(lg.data(), lg.data() + (e - b) * stride, out.data() + b * stride);
  }
  return out;
}

std::string NeighborReport::to_json() const {
  nlohmann::ordered_json j;
  j["anchor_index"] = anchor_index;
  j["class_id"] = class_id;
  j["level"] = level;
  j["augmented_pair_ds"] = augmented_pair_ds;
  j["class_size"] = class_size;
  j["violation_count"] = violation_count;
  j["violation_fraction"] = violation_fraction;
  j["min_ds_index"] = min_ds_index;
  j["min_ds"] = min_ds;
  return j.dump(2);
}

NeighborReport neighbor_discontinuity_report(const Classifier& model, const LabeledDataset& data,
                                             int class_id, int level, uint64_t seed) {
  if (class_id < 0 || class_id >= data.num_classes)
    throw std::invalid_argument("neighbor report: class id out of range");
  std::vector<int64_t> members;
  for (int64_t i = 0; i < data.count(); ++i)
    if (data.labels[static_cast<size_t>(i)] == class_id) members.push_back(i);
  if (members.size() < 2)
    throw std::runtime_error("neighbor report: class too small");

  Rng rng(derive_seed(seed, {0xa9c404ull, static_cast<uint64_t>(class_id)}));
  const int64_t anchor =
      members[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(members.size())))];

  ImageBatch xa = data.images.item0(anchor);
  auto [xap, specs] = sample_augmentation(xa, level, derive_seed(seed, {0x7171ull}));

  const std::vector<float> fa_row(extract_logits(model, xa).vec());
  const std::vector<float> fap_row(extract_logits(model, xap).vec());

  NeighborReport rep;
  rep.anchor_index = anchor;
  rep.class_id = class_id;
  rep.level = level;
  rep.augmented_pair_ds = static_cast<double>(distance_score(fa_row, fap_row));

  // gather the same-class candidates and score them in one pass
  const int64_t stride = data.images.size() / data.count();
  std::vector<int64_t> others;
  for (int64_t idx : members)
    if (idx != anchor) others.push_back(idx);
  ImageBatch xb({static_cast<int64_t>(others.size()), data.images.dim(1), data.images.dim(2),
                 data.images.dim(3)});
  for (size_t i = 0; i < others.size(); ++i)
    std::copy(data.images.data() + others[i] * stride, data.images.data() + (others[i] + 1) * stride,
              xb.data() + static_cast<int64_t>(i) * stride);
  LogitsMatrix fb = extract_logits(model, xb);

  rep.class_size = static_cast<int64_t>(others.size());
  rep.min_ds = std::numeric_limits<double>::infinity();
  const int64_t k = fb.dim(1);
  for (size_t i = 0; i < others.size(); ++i) {
    double ds = 0.0;
    for (int64_t j = 0; j < k; ++j) {
      const double d = static_cast<double>(fb[static_cast<int64_t>(i) * k + j]) - fa_row[static_cast<size_t>(j)];
      ds += d * d;
    }
    if (ds < rep.augmented_pair_ds) ++rep.violation_count;
    if (ds < rep.min_ds) {
      rep.min_ds = ds;
      rep.min_ds_index = others[i];
    }
  }
  rep.violation_fraction =
      static_cast<double>(rep.violation_count) / static_cast<double>(rep.class_size);
  return rep;
}

template <typename T>
Tensor<double> pca_embed(const Tensor<T>& logits, int dims) {
  if (logits.rank() != 2) throw std::invalid_argument("pca_embed: expected N x K logits");
  const int64_t n = logits.dim(0), k = logits.dim(1);
  if (n < 2) throw std::invalid_argument("pca_embed: need at least 2 rows");
  if (dims < 1 || dims > std::min(n, k))
    throw std::invalid_argument("pca_embed: dims must be in [1, min(N,K)]");

  Eigen::MatrixXd X(n, k);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < k; ++j) X(i, j) = static_cast<double>(logits[i * k + j]);
  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;
  const Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw std::runtime_error("pca_embed: eigensolver failed");

  // ascending from Eigen; take the top `dims` in descending order
  const double max_eig = std::max(es.eigenvalues().maxCoeff(), 0.0);
  const double tol = 1e-12 * std::max(1.0, max_eig);
  Tensor<double> out({n, dims});
  for (int d = 0; d < dims; ++d) {
    const int64_t col = k - 1 - d;
    if (es.eigenvalues()(col) <= tol) continue;  // rank-deficient: zero axis
    Eigen::VectorXd proj = X * es.eigenvectors().col(col);
    int64_t arg = 0;
    for (int64_t i = 1; i < n; ++i)
      if (std::abs(proj(i)) > std::abs(proj(arg))) arg = i;
    if (proj(arg) < 0.0) proj = -proj;
    for (int64_t i = 0; i < n; ++i) out[i * dims + d] = proj(i);
  }
  return out;
}

template Tensor<double> pca_embed<float>(const Tensor<float>&, int);
template Tensor<double> pca_embed<double>(const Tensor<double>&, int);

void embed_visualize_set(const Classifier& model, const VisualizeSet& vis,
                         const std::string& out_path) {
  if (vis.images.rank() != 4 || vis.roles.size() != static_cast<size_t>(vis.images.dim(0)))
    throw std::invalid_argument("embed_visualize_set: malformed visualization set");
  LogitsMatrix lg = extract_logits(model, vis.images);
  Tensor<double> xy = pca_embed(lg, 2);

  const int W = 640, H = 480, m = 40;
  Canvas cv(W, H);
  double xmin = xy[0], xmax = xy[0], ymin = xy[1], ymax = xy[1];
  for (int64_t i = 0; i < xy.dim(0); ++i) {
    xmin = std::min(xmin, xy[i * 2]);
    xmax = std::max(xmax, xy[i * 2]);
    ymin = std::min(ymin, xy[i * 2 + 1]);
    ymax = std::max(ymax, xy[i * 2 + 1]);
  }
  if (xmax - xmin < 1e-9) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-9) ymax = ymin + 1.0;
  const auto px = [&](double x) {
    return m + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (W - 2 * m)));
  };
  const auto py = [&](double y) {
    return H - m - static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (H - 2 * m)));
  };
  cv.rect_outline(m, m, W - m, H - m, {40, 40, 40});

  const Rgb gray{150, 150, 150}, red{214, 39, 40}, blue{31, 119, 180};
  for (int64_t i = 0; i < xy.dim(0); ++i) {
    if (vis.roles[static_cast<size_t>(i)] != VisRole::same_class) continue;
    cv.disc(px(xy[i * 2]), py(xy[i * 2 + 1]), 2, gray);
  }
  for (int64_t i = 0; i < xy.dim(0); ++i) {
    const int x = px(xy[i * 2]), y = py(xy[i * 2 + 1]);
    if (vis.roles[static_cast<size_t>(i)] == VisRole::augmented) {
      cv.disc(x, y, 4, blue);
    } else if (vis.roles[static_cast<size_t>(i)] == VisRole::original) {
      cv.disc(x, y, 6, red);
      cv.rect_outline(x - 7, y - 7, x + 7, y + 7, red);
    }
  }
  cv.text(m, 8, "PCA OF LOGITS: ANCHOR(RED) AUGMENTED(BLUE) SAME CLASS(GRAY)", {40, 40, 40});
  cv.save(out_path);
}

}  // namespace semcont
