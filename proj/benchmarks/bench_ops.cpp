#include <benchmark/benchmark.h>

#include <random>

#include "tpgcn/dataset.hpp"
#include "tpgcn/model.hpp"
#include "tpgcn/ops.hpp"
#include "tpgcn/toy_data.hpp"

using namespace tpgcn;

namespace {

Tensor<float> random_tensor(Shape shape, std::uint64_t seed) {
  Tensor<float> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.f, 1.f);
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = n(rng);
  return t;
}

void BM_ConvTemporal(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  const Var<float> x(random_tensor({8, c, 64, 50}, 1));
  const Var<float> w(random_tensor({c, c, 3}, 2));
  for (auto _ : state) {
    auto y = ops::conv_temporal<float>(x, w, std::nullopt, {1, 1, 1});
    benchmark::DoNotOptimize(y.value().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * c * c * 3 * 64 * 50);
}
BENCHMARK(BM_ConvTemporal)->Arg(32)->Arg(64)->Arg(128);

void BM_GraphAggregate(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  const Var<float> y(random_tensor({8, 3 * c, 64, 50}, 3));
  const Var<float> a(random_tensor({3, 50, 50}, 4));
  for (auto _ : state) {
    auto out = ops::graph_aggregate<float>(y, a);
    benchmark::DoNotOptimize(out.value().data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * 3 * c * 64 * 50 * 50);
}
BENCHMARK(BM_GraphAggregate)->Arg(32)->Arg(64)->Arg(128);

void BM_ToyModelForward(benchmark::State& state) {
  ModelConfig config = ModelConfig::toy();
  DatasetOptions options;
  options.features.mode = config.mode;
  options.features.strategy = config.strategy;
  options.frames = config.frames;
  const ToyDataset toy = make_toy_dataset(0, 4, 2, {config.frames, 0.01});
  const Dataset data = Dataset::from_sequences(toy.sequences, 4, options);
  std::vector<const FeatureBundle*> batch;
  for (std::size_t i = 0; i < data.size(); ++i) batch.push_back(&data.sample(i).bundle);
  const ModelInput<float> input = make_input<float>(batch);
  Model<float> model(config);
  for (auto _ : state) {
    auto logits = model.forward(input, false);
    benchmark::DoNotOptimize(logits.value().data());
  }
}
BENCHMARK(BM_ToyModelForward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
