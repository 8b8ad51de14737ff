// Serial reference vs OpenMP kernel timings. Thread count follows
// OMP_NUM_THREADS; with one core the two columns should match. The serial
// nearest-neighbour reference is a linear scan, so that pair also shows what
// the grid index buys.

#include <benchmark/benchmark.h>

#include "rubblevoid/kernels.hpp"
#include "rubblevoid/synthetic.hpp"

using namespace rubblevoid;

namespace {

std::vector<Point3> points(std::size_t n, std::uint64_t seed) {
  const auto rng = CounterRng::derive(seed, 3);
  std::vector<Point3> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 100 * rng.uniform(3 * i), y = 100 * rng.uniform(3 * i + 1);
    out[i] = {x, y, 0.05 * x + 3 * std::sin(0.2 * y) + 0.02 * rng.normal(3 * i + 2)};
  }
  return out;
}

GridSpec grid() { return GridSpec{0.0, 0.0, 0.25, 400, 400}; }

template <bool Parallel>
void BM_Rasterize(benchmark::State& state) {
  const auto pts = points(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    auto hf = Parallel ? kernels::rasterize(pts, grid(), SurfaceRule::MaxZ)
                       : kernels::serial::rasterize(pts, grid(), SurfaceRule::MaxZ);
    benchmark::DoNotOptimize(hf.elevation.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_NearestNeighbors(benchmark::State& state) {
  const auto target = points(static_cast<std::size_t>(state.range(0)), 2);
  const auto queries = points(2000, 3);
  const GridIndex index = build_index(target, 0.5);
  for (auto _ : state) {
    auto nn = Parallel ? kernels::nearest_neighbors(index, queries, 0.5)
                       : kernels::serial::nearest_neighbors(index, queries, 0.5);
    benchmark::DoNotOptimize(nn.data());
  }
  state.SetItemsProcessed(state.iterations() * 2000);
}

template <bool Parallel>
void BM_GapMap(benchmark::State& state) {
  const auto a = kernels::serial::rasterize(points(1'000'000, 4), grid(), SurfaceRule::MaxZ);
  const auto b = kernels::serial::rasterize(points(1'000'000, 5), grid(), SurfaceRule::MaxZ);
  for (auto _ : state) {
    auto g = Parallel ? kernels::gap_map(a, b) : kernels::serial::gap_map(a, b);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid().cell_count()));
}

template <bool Parallel>
void BM_Transform(benchmark::State& state) {
  auto pts = points(static_cast<std::size_t>(state.range(0)), 6);
  const double r[9] = {0.99995, -0.00999983, 0, 0.00999983, 0.99995, 0, 0, 0, 1};
  const double t[3] = {0.1, -0.2, 0.05};
  for (auto _ : state) {
    if (Parallel) {
      kernels::transform_points(pts, r, t);
    } else {
      kernels::serial::transform_points(pts, r, t);
    }
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Rasterize<false>)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rasterize<true>)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestNeighbors<false>)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NearestNeighbors<true>)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GapMap<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GapMap<true>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Transform<false>)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Transform<true>)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
