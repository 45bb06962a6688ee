#include <benchmark/benchmark.h>

#include "semcont/classifier.hpp"
#include "semcont/perturb.hpp"
#include "semcont/probes.hpp"
#include "semcont/rng.hpp"

using namespace semcont;

namespace {

ImageBatch rgb_batch(int64_t n, uint64_t seed) {
  ImageBatch x({n, 3, 32, 32});
  Rng rng(seed);
  for (int64_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.uniform());
  return x;
}

void BM_augment(benchmark::State& state) {
  const auto kind = static_cast<AugmentKind>(state.range(0));
  ImageBatch x = rgb_batch(128, 3);
  const AugmentSpec spec = level_params(kind, 2);
  for (auto _ : state) {
    ImageBatch y = apply_augmentation(x, spec);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_augment)->Arg(0)->Arg(1)->Arg(2)->Arg(3);

void BM_pgd(benchmark::State& state) {
  Model model("cnn_s", 3, 32, 10, 1);
  ImageBatch x = rgb_batch(64, 5);
  std::vector<int> y(64);
  Rng rng(9);
  for (auto& v : y) v = static_cast<int>(rng.uniform_int(10));
  AttackSpec attack;
  attack.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    ImageBatch adv = pgd_attack(model, x, y, attack);
    benchmark::DoNotOptimize(adv.data());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_pgd)->Arg(1)->Arg(10);

void BM_probe(benchmark::State& state) {
  ImageBatch x = rgb_batch(256, 17);
  for (auto _ : state) {
    ImageBatch y = sliding_puzzle(x, 4, 8, 0);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_probe);

}  // namespace
