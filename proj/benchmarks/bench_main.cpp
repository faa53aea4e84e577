#include <benchmark/benchmark.h>

#include <vector>

#include "swarmloc/baselines.hpp"
#include "swarmloc/clustering.hpp"
#include "swarmloc/localization.hpp"
#include "swarmloc/otfs.hpp"
#include "swarmloc/pipeline.hpp"
#include "swarmloc/swarm.hpp"

using namespace swarmloc;

namespace {

RangeMatrix masked_ranges(Index agents, double retention, std::uint64_t seed) {
  const Swarm s = generate_swarm(agents, Eigen::Vector3d::Constant(1000.0), seed);
  MeasurementConfig m;
  m.retention_ratio = retention;
  m.seed = seed;
  return observe_ranges(s, m);
}

void BM_AlsCompletion(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const Swarm s = generate_swarm(n, Eigen::Vector3d::Constant(100.0), 3);
  Eigen::MatrixXd d = true_range_matrix(s).array().square();
  Rng rng(4);
  std::bernoulli_distribution keep(0.8);
  Mask obs = Mask::Constant(n, n, false);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) obs(i, j) = obs(j, i) = keep(rng);
  }
  CompletionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(als_factorize(d, obs, cfg));
}
BENCHMARK(BM_AlsCompletion)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_ClassicalMds(benchmark::State& state) {
  const auto n = static_cast<Index>(state.range(0));
  const Eigen::MatrixXd d = true_range_matrix(generate_swarm(n, Eigen::Vector3d::Constant(1000.0), 1));
  for (auto _ : state) benchmark::DoNotOptimize(classical_mds(d));
}
BENCHMARK(BM_ClassicalMds)->Arg(20)->Arg(50)->Arg(80)->Unit(benchmark::kMicrosecond);

void BM_SpectralClustering(benchmark::State& state) {
  const RangeMatrix r = masked_ranges(static_cast<Index>(state.range(0)), 0.7, 2);
  ClusteringConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(spectral_cluster(r, cfg));
}
BENCHMARK(BM_SpectralClustering)->Arg(20)->Arg(50)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_OtfsEstimate(benchmark::State& state) {
  otfs::OtfsConfig cfg;
  const otfs::PilotLayout layout = otfs::PilotLayout::centered(cfg);
  Rng rng(5);
  const otfs::DdFrame frame =
      otfs::modulate_frame(cfg, otfs::random_bits(2 * static_cast<std::size_t>(layout.data_cell_count(32, 32)), rng),
                           layout);
  const otfs::Grid y =
      otfs::apply_channel(frame.grid, otfs::dd_channel_taps(32, 32, 0.5, 0.0, 2.3), 1e-3, 6);
  for (auto _ : state) benchmark::DoNotOptimize(otfs::estimate_channel(y, layout, cfg));
}
BENCHMARK(BM_OtfsEstimate)->Unit(benchmark::kMicrosecond);

void BM_OtfsLink(benchmark::State& state) {
  otfs::OtfsConfig cfg;
  const Swarm s = generate_swarm(4, Eigen::Vector3d::Constant(40.0), 7);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(otfs::otfs_range_pair(s, 0, 1, cfg));
  }
}
BENCHMARK(BM_OtfsLink)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const RangeMatrix r = masked_ranges(50, static_cast<double>(state.range(0)) / 10.0, 8);
  PipelineConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(localize_swarm(r, cfg));
}
BENCHMARK(BM_Pipeline)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_MdsMap(benchmark::State& state) {
  const RangeMatrix r = masked_ranges(50, 0.7, 9);
  for (auto _ : state) benchmark::DoNotOptimize(mds_map(r));
}
BENCHMARK(BM_MdsMap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
