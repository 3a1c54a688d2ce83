#include <benchmark/benchmark.h>

#include "gern/io.hpp"
#include "gern/kernels.hpp"
#include "gern/spanning.hpp"

using namespace gern;

namespace {

const DatasetBundle& sbm() {
  static const DatasetBundle bundle = [] {
    RngStream rng(1);
    return synth_sbm(4, 5000, 20.0 / 5000.0, 4.0 / 15000.0, rng);
  }();
  return bundle;
}

Matrix<float> random_features(std::size_t rows, std::size_t cols) {
  RngStream rng(2);
  Matrix<float> m(rows, cols);
  for (float& v : m.values()) v = static_cast<float>(rng.normal());
  return m;
}

template <bool Parallel>
void spmm(benchmark::State& state) {
  const NormalizedAdjacency a(sbm().graph);
  const auto x = random_features(sbm().graph.node_count(), static_cast<std::size_t>(state.range(0)));
  Matrix<float> out;
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::spmm(a, x, out);
    } else {
      kernels::serial::spmm(a, x, out);
    }
    benchmark::DoNotOptimize(out.values().data());
  }
}

template <bool Parallel>
void gemm(benchmark::State& state) {
  const auto x = random_features(sbm().graph.node_count(), static_cast<std::size_t>(state.range(0)));
  const auto w = random_features(static_cast<std::size_t>(state.range(0)), 64);
  Matrix<float> out;
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::gemm(x, w, out);
    } else {
      kernels::serial::gemm(x, w, out);
    }
    benchmark::DoNotOptimize(out.values().data());
  }
}

template <bool Parallel>
void tree_frequencies(benchmark::State& state) {
  const GeneratorSpec spec{TreeGenerator::ARst, 0.5};
  for (auto _ : state) {
    const auto table = Parallel ? edge_inclusion_frequencies(sbm().graph, spec, 64, RngStream(3))
                                : serial::edge_inclusion_frequencies(sbm().graph, spec, 64, RngStream(3));
    benchmark::DoNotOptimize(table.counts.data());
  }
}

}  // namespace

BENCHMARK(spmm<false>)->Name("spmm/serial")->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(spmm<true>)->Name("spmm/omp")->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(gemm<false>)->Name("gemm/serial")->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(gemm<true>)->Name("gemm/omp")->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(tree_frequencies<false>)->Name("tree_frequencies/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(tree_frequencies<true>)->Name("tree_frequencies/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
