#include <cmath>

#include "../test_stubs.hpp"
#include "acceptance.hpp"
#include "semcont/continuity.hpp"
#include "semcont/explain.hpp"
#include "semcont/perturb.hpp"
#include "semcont/probes.hpp"
#include "semcont/rng.hpp"
#include "semcont/synth.hpp"

namespace acceptance {

using namespace semcont;
using semcont::testing::LinearClassifier;
using semcont::testing::random_images;
using semcont::testing::random_labels;

namespace {

char detail_buf[512];

LabeledDataset synth_digit_dataset(int64_t count, const std::string& split) {
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

Outcome metric_loss_exactness(const Context&) {
  Outcome out;
  out.name = "metric/loss exactness (LD, DS, total)";
  bool ok = true;

  // hand-arithmetic anchors
  const std::vector<double> a{1.0, 2.0}, b{2.0, 0.0};
  auto ld = logits_difference(a, b);
  ok &= (ld[0] == 1.0 && ld[1] == -2.0);
  ok &= (distance_score(a, b) == 5.0);
  ok &= (distance_score(a, a) == 0.0);

  Rng rng(0xace);
  for (int t = 0; t < 500 && ok; ++t) {
    std::vector<double> u(10), v(10);
    for (int j = 0; j < 10; ++j) {
      u[static_cast<size_t>(j)] = rng.uniform(-8, 8);
      v[static_cast<size_t>(j)] = rng.uniform(-8, 8);
    }
    auto uv = logits_difference(u, v), vu = logits_difference(v, u);
    for (int j = 0; j < 10; ++j) ok &= (uv[static_cast<size_t>(j)] == -vu[static_cast<size_t>(j)]);
    ok &= (distance_score(u, v) == distance_score(v, u));
    ok &= (distance_score(u, v) >= 0.0);
    ok &= (distance_score(u, u) == 0.0);

    // alpha = 0 collapses to the base loss bit-exactly
    const double base = rng.uniform(0, 20), cont = rng.uniform(0, 20);
    ok &= (total_loss(base, cont, 0.0).total == base);
    const double alpha = rng.uniform(0, 3);
    const LossBreakdown lb = total_loss(base, cont, alpha);
    ok &= (lb.total == base + alpha * cont);
  }
  ok &= (total_loss(2.0, 3.0, 1.0).total == 5.0);

  out.pass = ok;
  out.detail = ok ? "identity, symmetry, antisymmetry, hand cases, alpha=0 collapse all exact"
                  : "an exactness assertion failed";
  return out;
}

Outcome gradient_correctness(const Context&) {
  Outcome out;
  out.name = "continuity-loss gradients vs central differences";
  double worst = 0.0;
  for (uint64_t trial = 0; trial < 3; ++trial) {
    Net<double> net = build_net<double>("mlp16", 1, 4, 3, 0xf00d + trial);
    Rng rng(0xbead + trial);
    Tensor<double> x({3, 1, 4, 4}), xp({3, 1, 4, 4});
    for (int64_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform();
      xp[i] = std::clamp(x[i] + rng.uniform(-0.15, 0.15), 0.0, 1.0);
    }
    ParamGrads<double> pg = net.zero_grads();
    continuity_loss_grads(net, x, xp, pg);

    auto value = [&]() {
      Tensor<double> fa = net.forward(x), fb = net.forward(xp);
      double loss = 0.0;
      for (int64_t i = 0; i < fa.size(); ++i) {
        const double d = fb[i] - fa[i];
        loss += d * d;
      }
      return loss / static_cast<double>(fa.dim(0));
    };
    auto params = net.params();
    const double h = 1e-5;
    for (size_t pi = 0; pi < params.size(); ++pi)
      for (int64_t j = 0; j < params[pi]->size(); ++j) {
        double& p = (*params[pi])[j];
        const double orig = p;
        p = orig + h;
        const double up = value();
        p = orig - h;
        const double dn = value();
        p = orig;
        const double fd = (up - dn) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - pg.g[pi][j]) /
                                    std::max({std::abs(fd), std::abs(pg.g[pi][j]), 1e-4}));
      }
  }
  out.pass = worst < 1e-3;
  std::snprintf(detail_buf, sizeof(detail_buf),
                "max relative error %.3e over 3 random parameter points (bar 1e-3)", worst);
  out.detail = detail_buf;
  return out;
}

Outcome perturbation_contracts(const Context&) {
  Outcome out;
  out.name = "perturbation contracts (identity, clip, hue round trip, PGD ball)";
  bool ok = true;
  std::string why;

  ImageBatch x = random_images({6, 3, 16, 16}, 0x11);
  for (auto spec : {AugmentSpec{AugmentKind::brightness, 0.0},
                    AugmentSpec{AugmentKind::contrast, 1.0},
                    AugmentSpec{AugmentKind::saturation, 1.0},
                    AugmentSpec{AugmentKind::hue, 0.0}}) {
    ImageBatch y = apply_augmentation(x, spec);
    for (int64_t i = 0; i < x.size(); ++i)
      if (y[i] != x[i]) {
        ok = false;
        why = "identity parameters are not bit-exact";
      }
  }

  for (int k = 0; k < kAugmentKindCount && ok; ++k)
    for (int level = 1; level <= 4; ++level) {
      ImageBatch y = apply_augmentation(x, level_params(static_cast<AugmentKind>(k), level));
      for (int64_t i = 0; i < y.size(); ++i)
        if (!(y[i] >= 0.0f && y[i] <= 1.0f)) {
          ok = false;
          why = "augmentation output escaped [0,1]";
        }
    }

  for (double h : {0.1, 0.2, 0.3, 0.4}) {
    ImageBatch fwd = apply_augmentation(x, {AugmentKind::hue, h});
    ImageBatch back = apply_augmentation(fwd, {AugmentKind::hue, -h});
    for (int64_t i = 0; i < x.size(); ++i)
      if (std::abs(back[i] - x[i]) > 2.0f / 255.0f) {
        ok = false;
        why = "hue round trip exceeded 2/255";
      }
  }

  Model model("cnn_s", 3, 16, 4, 0x77);
  auto y = random_labels(6, 4, 0x12);
  for (double eps : {0.0, 2.0, 8.0, 16.0}) {
    for (int iters : {1, 5, 10}) {
      for (bool rs : {false, true}) {
        AttackSpec a;
        a.epsilon = eps;
        a.step = std::min(2.0, eps);
        a.iterations = iters;
        a.random_start = rs;
        a.seed = static_cast<uint64_t>(iters);
        ImageBatch adv = pgd_attack(model, x, y, a);
        for (int64_t i = 0; i < x.size(); ++i) {
          const float diff = std::abs(adv[i] - x[i]);
          if (diff * 255.0f > eps + 1e-4 || adv[i] < 0.0f || adv[i] > 1.0f) {
            ok = false;
            why = "PGD left the epsilon ball or [0,1]";
          }
          if (eps == 0.0 && adv[i] != x[i]) {
            ok = false;
            why = "PGD(eps=0) is not the identity";
          }
        }
      }
    }
  }

  out.pass = ok;
  out.detail = ok ? "identity bit-exact; clipping holds; hue round trip <= 2/255; "
                    "ball containment over the (eps, step, iters) grid; PGD(0) identity"
                  : why;
  return out;
}

Outcome probe_invariants(const Context&) {
  Outcome out;
  out.name = "probe permutation invariants";
  bool ok = true;
  std::string why;

  ImageBatch x = random_images({4, 3, 32, 32}, 0x21);

  // identity severities are bitwise identity
  {
    ImageBatch a = rgb_translate(x, 0);
    ImageBatch b = sliding_puzzle(x, 4, 0, 3);
    for (int64_t i = 0; i < x.size(); ++i)
      if (a[i] != x[i] || b[i] != x[i]) {
        ok = false;
        why = "identity severity changed pixels";
      }
  }

  // channel-plane multiset preservation under the cyclic shift
  {
    ImageBatch y = rgb_translate(x, 5);
    for (int64_t img = 0; img < 4 && ok; ++img)
      for (int64_t c = 0; c < 3; ++c) {
        std::vector<float> p(x.data() + (img * 3 + c) * 1024, x.data() + (img * 3 + c + 1) * 1024);
        std::vector<float> q(y.data() + (img * 3 + c) * 1024, y.data() + (img * 3 + c + 1) * 1024);
        std::sort(p.begin(), p.end());
        std::sort(q.begin(), q.end());
        if (p != q) {
          ok = false;
          why = "rgb_translate changed a channel multiset";
        }
      }
  }

  // pixel-triple multiset preservation + determinism for center randomization
  {
    ImageBatch y1 = randomize_center(x, 1.0, 7);
    ImageBatch y2 = randomize_center(x, 1.0, 7);
    for (int64_t i = 0; i < x.size(); ++i)
      if (y1[i] != y2[i]) {
        ok = false;
        why = "randomize_center is not seed-deterministic";
      }
    for (int64_t img = 0; img < 4 && ok; ++img) {
      std::vector<std::array<float, 3>> p, q;
      for (int64_t r = 0; r < 32; ++r)
        for (int64_t c = 0; c < 32; ++c) {
          p.push_back({x.at4(img, 0, r, c), x.at4(img, 1, r, c), x.at4(img, 2, r, c)});
          q.push_back({y1.at4(img, 0, r, c), y1.at4(img, 1, r, c), y1.at4(img, 2, r, c)});
        }
      std::sort(p.begin(), p.end());
      std::sort(q.begin(), q.end());
      if (p != q) {
        ok = false;
        why = "randomize_center broke pixel triples";
      }
    }
  }

  // block multiset preservation and inverse-permutation reconstruction
  if (ok) {
    ImageBatch y = sliding_puzzle(x, 4, 8, 9);
    const int64_t bs = 8;
    auto block_of = [&](const ImageBatch& t, int64_t img, int64_t cell) {
      std::vector<float> v;
      v.reserve(static_cast<size_t>(3 * bs * bs));
      for (int64_t c = 0; c < 3; ++c)
        for (int64_t r = 0; r < bs; ++r)
          for (int64_t q = 0; q < bs; ++q)
            v.push_back(t.at4(img, c, (cell / 4) * bs + r, (cell % 4) * bs + q));
      return v;
    };
    for (int64_t img = 0; img < 4 && ok; ++img) {
      // find each output block among the input blocks (random content: unique)
      std::vector<int> perm(16, -1);
      for (int cell = 0; cell < 16; ++cell) {
        auto outb = block_of(y, img, cell);
        for (int src = 0; src < 16; ++src)
          if (outb == block_of(x, img, src)) {
            perm[static_cast<size_t>(cell)] = src;
            break;
          }
        if (perm[static_cast<size_t>(cell)] < 0) {
          ok = false;
          why = "sliding_puzzle lost a block";
        }
      }
      if (!ok) break;
      ImageBatch rebuilt(x.shape());
      for (int cell = 0; cell < 16; ++cell) {
        const int src = perm[static_cast<size_t>(cell)];
        for (int64_t c = 0; c < 3; ++c)
          for (int64_t r = 0; r < bs; ++r)
            for (int64_t q = 0; q < bs; ++q)
              rebuilt.at4(img, c, (src / 4) * bs + r, (src % 4) * bs + q) =
                  y.at4(img, c, (cell / 4) * bs + r, (cell % 4) * bs + q);
      }
      for (int64_t c = 0; c < 3; ++c)
        for (int64_t r = 0; r < 32; ++r)
          for (int64_t q = 0; q < 32; ++q)
            if (rebuilt.at4(img, c, r, q) != x.at4(img, c, r, q)) {
              ok = false;
              why = "inverse permutation did not reconstruct the input";
            }
    }
  }

  out.pass = ok;
  out.detail = ok ? "multisets preserved at channel/pixel/block granularity; identity, "
                    "determinism and reconstruction hold"
                  : why;
  return out;
}

Outcome ig_completeness(const Context&) {
  Outcome out;
  out.name = "integrated-gradients completeness";

  // exactness on a linear model, independent of step count
  const std::vector<float> w{0.6f, -0.4f, 1.2f, 0.1f};
  LinearClassifier linear({w, {0.2f, 0.2f, -0.2f, 0.0f}}, 1, 2);
  ImageBatch lx = ImageBatch::from({1, 1, 2, 2}, {0.9f, 0.1f, 0.5f, 0.3f});
  ImageBatch lb = ImageBatch::from({1, 1, 2, 2}, {0.2f, 0.0f, 0.8f, 0.6f});
  for (int steps : {2, 16, 256}) {
    AttributionMap map = integrated_gradients(linear, lx, 0, lb, steps);
    for (int64_t i = 0; i < 4; ++i) {
      const double expect = static_cast<double>(w[static_cast<size_t>(i)]) * (lx[i] - lb[i]);
      if (std::abs(map.values[i] - expect) > 1e-5) {
        out.pass = false;
        out.detail = "linear-model exactness failed at steps=" + std::to_string(steps);
        return out;
      }
    }
  }

  // residual bar on a trained small CNN
  LabeledDataset tr = synth_digit_dataset(768, "train");
  TrainingRecipe recipe;
  recipe.regime = Regime::BASE;
  recipe.optimizer.epochs = 3;
  recipe.optimizer.batch_size = 64;
  recipe.optimizer.learning_rate = 1e-3;
  recipe.seed = 0x51;
  Model model = train_fresh(tr, recipe);

  LabeledDataset te = synth_digit_dataset(10, "test");
  double rel_worst = 0.0, res32 = 0.0, res256 = 0.0;
  for (int64_t i = 0; i < te.count(); ++i) {
    ImageBatch x = te.images.item0(i);
    ImageBatch black(x.shape());
    const int target = te.labels[static_cast<size_t>(i)];
    AttributionMap m256 = integrated_gradients(model, x, target, black, 256);
    AttributionMap m32 = integrated_gradients(model, x, target, black, 32);
    const LogitsMatrix fx = model.logits(x), fb = model.logits(black);
    const double delta = std::abs(static_cast<double>(fx[target]) - fb[target]);
    res256 += ig_completeness_residual(model, m256, x, black);
    res32 += ig_completeness_residual(model, m32, x, black);
    rel_worst = std::max(rel_worst, ig_completeness_residual(model, m256, x, black) /
                                        std::max(delta, 1e-9));
  }

  out.pass = rel_worst < 0.01 && res256 < res32;
  std::snprintf(detail_buf, sizeof(detail_buf),
                "worst residual %.4f%% of |F(x)-F(b)| at 256 steps (bar 1%%); "
                "residual shrinks 32->256 steps (%.3e -> %.3e); linear model exact",
                rel_worst * 100.0, res32, res256);
  out.detail = detail_buf;
  return out;
}

}  // namespace acceptance
