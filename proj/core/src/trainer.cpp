#include "semcont/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "semcont/rng.hpp"
#include "semcont/runconfig.hpp"

namespace fs = std::filesystem;

namespace semcont {

const char* to_string(Regime r) {
  switch (r) {
    case Regime::BASE: return "base";
    case Regime::C: return "c";
    case Regime::ADV: return "adv";
    case Regime::ADVC: return "advc";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  if (s == "base" || s == "BASE") return Regime::BASE;
  if (s == "c" || s == "C") return Regime::C;
  if (s == "adv" || s == "ADV") return Regime::ADV;
  if (s == "advc" || s == "ADVC" || s == "adv+c" || s == "ADV+C") return Regime::ADVC;
  throw std::invalid_argument("unknown regime: " + s);
}

void TrainingRecipe::validate() const {
  if (alpha < 0.0) throw std::invalid_argument("recipe: alpha must be >= 0");
  if (augment_level < 0 || augment_level > 4)
    throw std::invalid_argument("recipe: augment_level must be 0 (unpinned) or 1..4");
  if (regime == Regime::ADV || regime == Regime::ADVC) attack.validate();
  if (optimizer.name != "adam")
    throw std::invalid_argument("recipe: unsupported optimizer " + optimizer.name);
  if (optimizer.batch_size < 1 || optimizer.epochs < 1 || optimizer.learning_rate <= 0.0)
    throw std::invalid_argument("recipe: bad optimizer settings");
}

void MetricsLog::validate() const {
  for (size_t i = 1; i < steps.size(); ++i)
    if (steps[i].step <= steps[i - 1].step)
      throw std::runtime_error("metrics: step rows not monotonically increasing");
}

void MetricsLog::write_csv(const std::string& run_dir) const {
  fs::create_directories(run_dir);
  {
    std::ofstream f(fs::path(run_dir) / "metrics.csv", std::ios::trunc);
    f << "step,base,continuity,alpha,total\n";
    char buf[160];
    for (const auto& r : steps) {
      std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g,%.9g\n",
                    static_cast<long long>(r.step), r.loss.base, r.loss.continuity, r.loss.alpha,
                    r.loss.total);
      f << buf;
    }
    if (!f) throw std::runtime_error("metrics: cannot write metrics.csv in " + run_dir);
  }
  if (!epochs.empty()) {
    std::ofstream f(fs::path(run_dir) / "epochs.csv", std::ios::trunc);
    f << "epoch,clean_accuracy,adv_accuracy,mean_ds\n";
    char buf[160];
    for (const auto& e : epochs) {
      std::snprintf(buf, sizeof(buf), "%d,%.6f,", e.epoch, e.clean_accuracy);
      f << buf;
      if (e.adv_accuracy) {
        std::snprintf(buf, sizeof(buf), "%.6f", *e.adv_accuracy);
        f << buf;
      }
      f << ',';
      if (e.mean_ds) {
        std::snprintf(buf, sizeof(buf), "%.9g", *e.mean_ds);
        f << buf;
      }
      f << '\n';
    }
  }
}

namespace {

std::pair<ImageBatch, std::vector<int>> gather(const LabeledDataset& data,
                                               const std::vector<int64_t>& order, int64_t begin,
                                               int64_t end) {
  const int64_t stride = data.images.size() / data.count();
  std::vector<int64_t> shape = data.images.shape();
  shape[0] = end - begin;
  ImageBatch x(shape);
  std::vector<int> y(static_cast<size_t>(end - begin));
  for (int64_t i = begin; i < end; ++i) {
    const int64_t src = order[static_cast<size_t>(i)];
    std::copy(data.images.data() + src * stride, data.images.data() + (src + 1) * stride,
              x.data() + (i - begin) * stride);
    y[static_cast<size_t>(i - begin)] = data.labels[static_cast<size_t>(src)];
  }
  return {std::move(x), std::move(y)};
}

/// One optimization step; returns the logged breakdown.
LossBreakdown train_step(Model& model, ParamGrads<float>& pg, Adam<float>& opt,
                         const ImageBatch& x, const std::vector<int>& y,
                         const TrainingRecipe& recipe, uint64_t step_seed) {
  Net<float>& net = model.net();
  const double alpha = recipe.effective_alpha();
  pg.zero();

  // the branch that carries cross-entropy: clean for BASE/C, adversarial
  // for ADV/ADVC
  ImageBatch primary;
  const bool adversarial = recipe.regime == Regime::ADV || recipe.regime == Regime::ADVC;
  if (adversarial) {
    AttackSpec a = recipe.attack;
    a.seed = derive_seed(step_seed, {0x9dull});
    primary = pgd_attack(model, x, y, a);
  } else {
    primary = x;
  }

  Trace<float> tp;
  LogitsMatrix fp = net.forward(primary, tp);
  auto ce = softmax_cross_entropy(fp, y);

  double continuity = 0.0;
  if (alpha > 0.0) {
    // the paired branch: augmented twin for C, the clean image for ADVC
    ImageBatch secondary;
    if (recipe.regime == Regime::C) {
      int level = recipe.augment_level;
      if (level == 0) {
        Rng lvl_rng(derive_seed(step_seed, {0x1e7ull}));
        level = 1 + static_cast<int>(lvl_rng.uniform_int(4));
      }
      secondary = sample_augmentation(x, level, derive_seed(step_seed, {0xa7ull})).first;
    } else {
      secondary = x;
    }
    Trace<float> ts;
    LogitsMatrix fs = net.forward(secondary, ts);

    const int64_t n = fp.dim(0);
    Tensor<float> diff(fp.shape());
    double acc = 0.0;
    for (int64_t i = 0; i < fp.size(); ++i) {
      diff[i] = fs[i] - fp[i];
      acc += static_cast<double>(diff[i]) * static_cast<double>(diff[i]);
    }
    continuity = acc / static_cast<double>(n);

    const float scale = static_cast<float>(2.0 * alpha / static_cast<double>(n));
    const bool clean_is_primary = !adversarial;
    Tensor<float> dlp = ce.dlogits;
    if (!(recipe.stop_gradient_clean && clean_is_primary))
      for (int64_t i = 0; i < dlp.size(); ++i) dlp[i] -= scale * diff[i];
    net.backward(tp, dlp, &pg, false);
    if (!(recipe.stop_gradient_clean && !clean_is_primary)) {
      Tensor<float> dls(fs.shape());
      for (int64_t i = 0; i < dls.size(); ++i) dls[i] = scale * diff[i];
      net.backward(ts, dls, &pg, false);
    }
  } else {
    net.backward(tp, ce.dlogits, &pg, false);
  }

  opt.step(pg);
  return total_loss(static_cast<double>(ce.loss), continuity, alpha);
}

}  // namespace

MetricsLog train(Model& model, const LabeledDataset& data, const TrainingRecipe& recipe,
                 const std::string& run_dir, const LabeledDataset* eval_data,
                 const std::string& dataset_name) {
  recipe.validate();
  data.validate();
  if (model.num_classes() != data.num_classes)
    throw std::invalid_argument("train: model/dataset class count mismatch");

  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    RunConfig rc;
    rc.dataset = dataset_name.empty() ? data.name : dataset_name;
    rc.out_dir = run_dir;
    rc.recipe = recipe;
    std::ofstream f(fs::path(run_dir) / "config.json", std::ios::trunc);
    f << runconfig_to_json(rc) << "\n";
    if (!f) throw std::runtime_error("train: cannot write config.json in " + run_dir);
  }

  Adam<float> opt(model.net().params(), recipe.optimizer.learning_rate);
  ParamGrads<float> pg = model.net().zero_grads();
  MetricsLog log;
  const int64_t n = data.count();
  const int64_t bs = recipe.optimizer.batch_size;
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

  int64_t step = 0;
  for (int epoch = 0; epoch < recipe.optimizer.epochs; ++epoch) {
    Rng order_rng(derive_seed(recipe.seed, {0x0edull, static_cast<uint64_t>(epoch)}));
    order_rng.shuffle(order.begin(), order.end());
    for (int64_t b = 0; b < n; b += bs) {
      const int64_t e = std::min(n, b + bs);
      auto [x, y] = gather(data, order, b, e);
      const uint64_t step_seed =
          derive_seed(recipe.seed, {0x57e9ull, static_cast<uint64_t>(step)});
      LossBreakdown lb = train_step(model, pg, opt, x, y, recipe, step_seed);
      if (!std::isfinite(lb.total))
        throw std::runtime_error("train: non-finite loss at step " + std::to_string(step) +
                                 " (base=" + std::to_string(lb.base) +
                                 ", continuity=" + std::to_string(lb.continuity) + ")");
      log.steps.push_back({step, lb});
      ++step;
    }
    if (eval_data) {
      EpochRow row;
      row.epoch = epoch;
      row.clean_accuracy = evaluate_accuracy(model, *eval_data);
      log.epochs.push_back(row);
    }
    if (!run_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "checkpoint-epoch%02d", epoch);
      model.save((fs::path(run_dir) / name).string());
    }
  }
  if (!run_dir.empty()) log.write_csv(run_dir);
  return log;
}

Model train_fresh(const LabeledDataset& data, const TrainingRecipe& recipe,
                  const std::string& run_dir, const LabeledDataset* eval_data,
                  MetricsLog* log_out) {
  Model model(recipe.arch, static_cast<int>(data.images.dim(1)),
              static_cast<int>(data.images.dim(2)), data.num_classes, recipe.seed);
  MetricsLog log = train(model, data, recipe, run_dir, eval_data);
  if (log_out) *log_out = std::move(log);
  return model;
}

double evaluate_accuracy(const Classifier& model, const LabeledDataset& data, int batch_size) {
  if (model.num_classes() != data.num_classes)
    throw std::invalid_argument("evaluate: model/dataset class count mismatch");
  if (data.count() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const int64_t n = data.count();
  int64_t correct = 0;
  for (int64_t b = 0; b < n; b += batch_size) {
    const int64_t e = std::min(n, b + batch_size);
    LogitsMatrix lg = model.logits(data.images.slice0(b, e));
    const int64_t k = lg.dim(1);
    for (int64_t i = 0; i < e - b; ++i) {
      const float* row = lg.data() + i * k;
      int64_t arg = 0;
      for (int64_t j = 1; j < k; ++j)
        if (row[j] > row[arg]) arg = j;
      if (arg == data.labels[static_cast<size_t>(b + i)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double evaluate_adversarial(const Classifier& model, const LabeledDataset& data,
                            const AttackSpec& attack, int batch_size) {
  if (model.num_classes() != data.num_classes)
    throw std::invalid_argument("evaluate: model/dataset class count mismatch");
  if (data.count() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const int64_t n = data.count();
  int64_t correct = 0;
  for (int64_t b = 0; b < n; b += batch_size) {
    const int64_t e = std::min(n, b + batch_size);
    std::vector<int> y(data.labels.begin() + b, data.labels.begin() + e);
    AttackSpec a = attack;
    a.seed = derive_seed(attack.seed, {0xe7a1ull, static_cast<uint64_t>(b)});
    ImageBatch adv = pgd_attack(model, data.images.slice0(b, e), y, a);
    LogitsMatrix lg = model.logits(adv);
    const int64_t k = lg.dim(1);
    for (int64_t i = 0; i < e - b; ++i) {
      const float* row = lg.data() + i * k;
      int64_t arg = 0;
      for (int64_t j = 1; j < k; ++j)
        if (row[j] > row[arg]) arg = j;
      if (arg == y[static_cast<size_t>(i)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double evaluate_continuity(const Classifier& model, const LabeledDataset& data, AugmentKind kind,
                           int level, int64_t sample_count, uint64_t seed) {
  if (data.count() == 0) throw std::invalid_argument("evaluate_continuity: empty dataset");
  const int64_t n = std::min<int64_t>(sample_count, data.count());
  LabeledDataset sample = n == data.count() ? data : subset_seeded(data, n, seed);
  ImageBatch aug = apply_augmentation(sample.images, level_params(kind, level));
  double total = 0.0;
  const int64_t bs = 256;
  for (int64_t b = 0; b < n; b += bs) {
    const int64_t e = std::min(n, b + bs);
    LogitsMatrix fx = model.logits(sample.images.slice0(b, e));
    LogitsMatrix fxp = model.logits(aug.slice0(b, e));
    for (float v : distance_score_rows(fx, fxp)) total += v;
  }
  return total / static_cast<double>(n);
}

double mean_input_gradient_norm(const Classifier& model, const LabeledDataset& data,
                                int64_t sample_count, uint64_t seed) {
  if (data.count() == 0) throw std::invalid_argument("gradient norm: empty dataset");
  const int64_t n = std::min<int64_t>(sample_count, data.count());
  LabeledDataset sample = n == data.count() ? data : subset_seeded(data, n, seed);
  const int64_t bs = 256;
  double total = 0.0;
  const int64_t pix = sample.images.size() / sample.count();
  for (int64_t b = 0; b < n; b += bs) {
    const int64_t e = std::min(n, b + bs);
    std::vector<int> y(sample.labels.begin() + b, sample.labels.begin() + e);
    ImageBatch g = model.ce_input_gradient(sample.images.slice0(b, e), y);
    // ce_input_gradient carries the 1/batch mean factor; undo it so the
    // statistic is per-image
    const double scale = static_cast<double>(e - b);
    for (int64_t i = 0; i < e - b; ++i) {
      double s = 0.0;
      for (int64_t p = 0; p < pix; ++p) {
        const double v = static_cast<double>(g[i * pix + p]) * scale;
        s += v * v;
      }
      total += std::sqrt(s);
    }
  }
  return total / static_cast<double>(n);
}

std::vector<AlphaSweepRow> alpha_sweep(const TrainingRecipe& recipe_template,
                                       const LabeledDataset& train_data,
                                       const LabeledDataset& test_data,
                                       const std::vector<double>& alphas,
                                       int64_t ds_sample_count, const std::string& out_root) {
  if (alphas.empty()) throw std::invalid_argument("alpha_sweep: empty alpha list");
  for (double a : alphas)
    if (a < 0.0) throw std::invalid_argument("alpha_sweep: negative alpha");
  std::vector<AlphaSweepRow> rows;
  for (double a : alphas) {
    TrainingRecipe r = recipe_template;
    r.regime = Regime::C;
    r.alpha = a;
    std::string run_dir;
    if (!out_root.empty()) {
      char name[48];
      std::snprintf(name, sizeof(name), "alpha-%g", a);
      run_dir = (fs::path(out_root) / name).string();
    }
    Model m = train_fresh(train_data, r, run_dir);
    AlphaSweepRow row;
    row.alpha = a;
    row.accuracy = evaluate_accuracy(m, test_data);
    for (int k = 0; k < kAugmentKindCount; ++k)
      row.summed_ds_level1 += evaluate_continuity(m, test_data, static_cast<AugmentKind>(k), 1,
                                                  ds_sample_count, 0x5eedull);
    rows.push_back(row);
  }
  return rows;
}

ImageBatch adapt_images(const ImageBatch& x, int64_t channels, int64_t side) {
  require_images(x, "adapt_images");
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c == channels && h == side && w == side) return x;
  if (!(c == channels || (c == 1 && channels == 3)))
    throw std::invalid_argument("adapt_images: cannot map " + std::to_string(c) + " channels to " +
                                std::to_string(channels));
  ImageBatch out({n, channels, side, side});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t oc = 0; oc < channels; ++oc) {
      const int64_t sc = c == channels ? oc : 0;  // grayscale replicated
      const float* src = x.data() + (i * c + sc) * h * w;
      float* dst = out.data() + (i * channels + oc) * side * side;
      for (int64_t oy = 0; oy < side; ++oy) {
        const double sy = (static_cast<double>(oy) + 0.5) * h / side - 0.5;
        const int64_t y0 = std::clamp<int64_t>(static_cast<int64_t>(std::floor(sy)), 0, h - 1);
        const int64_t y1 = std::min<int64_t>(y0 + 1, h - 1);
        const double fy = std::clamp(sy - static_cast<double>(y0), 0.0, 1.0);
        for (int64_t ox = 0; ox < side; ++ox) {
          const double sx = (static_cast<double>(ox) + 0.5) * w / side - 0.5;
          const int64_t x0 = std::clamp<int64_t>(static_cast<int64_t>(std::floor(sx)), 0, w - 1);
          const int64_t x1 = std::min<int64_t>(x0 + 1, w - 1);
          const double fx = std::clamp(sx - static_cast<double>(x0), 0.0, 1.0);
          const double v = src[y0 * w + x0] * (1 - fy) * (1 - fx) +
                           src[y0 * w + x1] * (1 - fy) * fx + src[y1 * w + x0] * fy * (1 - fx) +
                           src[y1 * w + x1] * fy * fx;
          dst[oy * side + ox] = static_cast<float>(v);
        }
      }
    }
  }
  return out;
}

std::pair<Model, double> finetune_transfer(const Model& source,
                                           const LabeledDataset& target_train,
                                           const LabeledDataset& target_test,
                                           const TrainingRecipe& recipe,
                                           const std::string& run_dir) {
  const auto dims = source.input_dims();
  LabeledDataset tr = target_train;
  tr.images = adapt_images(target_train.images, dims[0], dims[1]);
  LabeledDataset te = target_test;
  te.images = adapt_images(target_test.images, dims[0], dims[1]);

  Model model = source.with_new_head(target_train.num_classes,
                                     derive_seed(recipe.seed, {0x4eadull}));
  TrainingRecipe r = recipe;
  r.regime = Regime::BASE;  // head retraining is plain fitting
  train(model, tr, r, run_dir, nullptr, target_train.name);
  const double acc = evaluate_accuracy(model, te);
  return {std::move(model), acc};
}

}  // namespace semcont
