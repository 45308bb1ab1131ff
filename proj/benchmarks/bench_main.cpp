#include <benchmark/benchmark.h>

#include "bitbit/coverage.hpp"
#include "bitbit/encoder.hpp"
#include "bitbit/qsim.hpp"

namespace {

void BM_FitEncoder(benchmark::State& state) {
  const auto d = bitbit::make_synthetic(static_cast<std::size_t>(state.range(0)), 16, 4, 1.0, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bitbit::fit_encoder(d, {bitbit::Scheme::kPca, 0}, 24));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitEncoder)->Arg(1000)->Arg(10000);

void BM_EncodeSamples(benchmark::State& state) {
  const auto d = bitbit::make_synthetic(static_cast<std::size_t>(state.range(0)), 16, 4, 1.0, 2);
  const auto model = bitbit::fit_encoder(d, {bitbit::Scheme::kPca, 0}, 24);
  for (auto _ : state) benchmark::DoNotOptimize(bitbit::encode_samples(model, d.features));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeSamples)->Arg(1000)->Arg(100000);

void BM_BuildTable(benchmark::State& state) {
  const auto d = bitbit::make_synthetic(static_cast<std::size_t>(state.range(0)), 8, 4, 1.0, 3);
  const auto model = bitbit::fit_encoder(d, {bitbit::Scheme::kPca, 0}, 20);
  const auto codes = bitbit::encode_samples(model, d.features);
  for (auto _ : state) {
    const auto table = bitbit::build_table(codes, d.labels, 4);
    benchmark::DoNotOptimize(bitbit::train_collision_incidence(table));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildTable)->Arg(10000)->Arg(100000);

void BM_SweepQubits(benchmark::State& state) {
  const auto d = bitbit::make_synthetic(2000, 10, 3, 1.0, 4);
  const auto split = bitbit::split_train_test(d, {0.8, 4, false});
  bitbit::SweepOptions options;
  options.n_x_max = 64;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bitbit::sweep_qubits(split.train, split.test, {bitbit::Scheme::kPca, 0}, options));
  }
}
BENCHMARK(BM_SweepQubits)->Unit(benchmark::kMillisecond);

void BM_EvaluateLoss(benchmark::State& state) {
  const auto n_x = static_cast<std::size_t>(state.range(0));
  auto model = bitbit::QuantumModel::hardware_efficient(n_x, 2, 2);
  bitbit::randomize_parameters(model, 5);
  bitbit::TrainingBatch batch;
  const std::uint64_t unique = std::uint64_t{1} << n_x;
  for (std::uint64_t z = 0; z < unique; ++z) {
    batch.records.push_back({bitbit::Bitstring::from_uint(z, n_x), static_cast<int>(z % 4),
                             1.0 / static_cast<double>(unique)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(bitbit::evaluate_loss(model, batch));
}
BENCHMARK(BM_EvaluateLoss)->Arg(4)->Arg(6)->Arg(8);

void BM_RotosolveSweep(benchmark::State& state) {
  auto model = bitbit::QuantumModel::hardware_efficient(6, 2, 2);
  bitbit::randomize_parameters(model, 6);
  bitbit::TrainingBatch batch;
  for (std::uint64_t z = 0; z < 64; ++z) {
    batch.records.push_back({bitbit::Bitstring::from_uint(z, 6), static_cast<int>(z % 4), 1.0 / 64.0});
  }
  for (auto _ : state) benchmark::DoNotOptimize(bitbit::train_sweeps(model, batch, 1));
}
BENCHMARK(BM_RotosolveSweep)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
