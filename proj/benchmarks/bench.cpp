#include <benchmark/benchmark.h>

#include "donet/mlp.hpp"
#include "donet/rng.hpp"
#include "donet/svd.hpp"

namespace {

donet::Matrix random_matrix(std::size_t rows, std::size_t cols, donet::Rng& rng) {
    donet::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

void bm_multiply(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    donet::Rng rng(7);
    const donet::Matrix a = random_matrix(n, n, rng);
    const donet::Matrix b = random_matrix(n, n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(donet::multiply(a, b));
}
BENCHMARK(bm_multiply)->Arg(64)->Arg(256);

void bm_svd(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    donet::Rng rng(7);
    const donet::Matrix a = random_matrix(n, n / 2, rng);
    for (auto _ : state) benchmark::DoNotOptimize(donet::svd(a));
}
BENCHMARK(bm_svd)->Arg(32)->Arg(128);

void bm_mlp_forward(benchmark::State& state) {
    donet::Rng rng(7);
    const donet::MlpParams p = donet::init_mlp({50, 128, 5, 20}, rng);
    const donet::Matrix x = random_matrix(50, 120, rng);
    for (auto _ : state) benchmark::DoNotOptimize(donet::forward(p, x));
}
BENCHMARK(bm_mlp_forward);

void bm_mlp_backward(benchmark::State& state) {
    donet::Rng rng(7);
    const donet::MlpParams p = donet::init_mlp({50, 128, 5, 20}, rng);
    const donet::Matrix x = random_matrix(50, 120, rng);
    const donet::Matrix d = random_matrix(20, 120, rng);
    donet::ForwardCache cache;
    donet::forward(p, x, &cache);
    for (auto _ : state) benchmark::DoNotOptimize(donet::backward(p, cache, d));
}
BENCHMARK(bm_mlp_backward);

} // namespace

BENCHMARK_MAIN();
