#include <benchmark/benchmark.h>

#include "semcont/classifier.hpp"
#include "semcont/nn.hpp"
#include "semcont/rng.hpp"

using namespace semcont;

namespace {

ImageBatch random_batch(int64_t n, int64_t c, int64_t side, uint64_t seed) {
  ImageBatch x({n, c, side, side});
  Rng rng(seed);
  for (int64_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform());
  return x;
}

std::vector<int> random_labels(int64_t n, int k, uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(static_cast<size_t>(n));
  for (auto& v : y) v = static_cast<int>(rng.uniform_int(k));
  return y;
}

void BM_forward(benchmark::State& state) {
  const int64_t batch = state.range(0);
  Model model("cnn_s", 3, 32, 10, 1);
  ImageBatch x = random_batch(batch, 3, 32, 7);
  for (auto _ : state) {
    LogitsMatrix lg = model.logits(x);
    benchmark::DoNotOptimize(lg.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_forward)->Arg(32)->Arg(128);

void BM_train_step(benchmark::State& state) {
  const int64_t batch = state.range(0);
  Model model("cnn_s", 3, 32, 10, 1);
  ImageBatch x = random_batch(batch, 3, 32, 7);
  auto y = random_labels(batch, 10, 11);
  ParamGrads<float> pg = model.net().zero_grads();
  Adam<float> opt(model.net().params(), 1e-3);
  for (auto _ : state) {
    pg.zero();
    Trace<float> tr;
    LogitsMatrix lg = model.net().forward(x, tr);
    auto ce = softmax_cross_entropy(lg, y);
    model.net().backward(tr, ce.dlogits, &pg, false);
    opt.step(pg);
    benchmark::DoNotOptimize(ce.loss);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_train_step)->Arg(128);

void BM_input_gradient(benchmark::State& state) {
  const int64_t batch = state.range(0);
  Model model("cnn_s", 3, 32, 10, 1);
  ImageBatch x = random_batch(batch, 3, 32, 7);
  auto y = random_labels(batch, 10, 11);
  for (auto _ : state) {
    ImageBatch g = model.ce_input_gradient(x, y);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_input_gradient)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
