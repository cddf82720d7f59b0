#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include <unistd.h>

#include "altprobe/embstore.hpp"
#include "altprobe/metrics.hpp"
#include "altprobe/probe.hpp"

using namespace altprobe;

static void BM_Mcc(benchmark::State& state) {
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mcc({i % 97, i % 89, i % 13, i % 7}));
    ++i;
  }
}
BENCHMARK(BM_Mcc);

static void BM_LinearTrain(benchmark::State& state) {
  const auto n = state.range(0);
  const auto d = state.range(1);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, d);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
    y[static_cast<std::size_t>(i)] = x(i, 0) + normal(rng) > 0;
  }
  ProbeConfig config;
  config.l2 = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(train(config, x, y));
}
BENCHMARK(BM_LinearTrain)->Args({256, 32})->Args({400, 768})->Unit(benchmark::kMillisecond);

static void BM_StoreRead(benchmark::State& state) {
  const auto path = std::filesystem::temp_directory_path() / ("altprobe-bench-" + std::to_string(::getpid()) + ".altp");
  const std::uint32_t L = 13, d = static_cast<std::uint32_t>(state.range(0)), T = 12;
  std::vector<SentenceEmbeddings> records;
  for (int i = 0; i < 200; ++i) {
    auto r = SentenceEmbeddings::zeros("fava:" + std::to_string(i), L, d, T);
    r.span_start = 1;
    r.span_end = 2;
    r.content_mask.assign(T, 1);
    records.push_back(std::move(r));
  }
  write_store({"bench", L, d}, records, path);
  for (auto _ : state) {
    StoreReader reader(path);
    std::size_t n = 0;
    for (const auto& r : reader) n += r.data.size();
    benchmark::DoNotOptimize(n);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * std::filesystem::file_size(path));
  std::filesystem::remove(path);
  std::filesystem::remove(sidecar_path(path));
}
BENCHMARK(BM_StoreRead)->Arg(64)->Arg(768)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
