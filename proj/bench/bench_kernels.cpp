// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "darth/kernels.hpp"
#include "darth/sweep.hpp"

using namespace darth;

namespace {

struct BitlineInputs {
    std::vector<double> net = std::vector<double>(64 * 64);
    std::vector<double> plus = std::vector<double>(64 * 64);
    std::vector<std::uint64_t> masks;
    std::vector<double> out, out_plus;

    explicit BitlineInputs(std::size_t n) : masks(n), out(n * 64), out_plus(n * 64) {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> d(0.0, 2.0);
        for (auto& v : net) v = d(rng);
        for (auto& v : plus) v = std::abs(d(rng));
        for (auto& m : masks) m = rng();
    }
};

void BM_BitlineSerial(benchmark::State& state) {
    BitlineInputs in(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        kernels::bitline_sums_serial(in.net, in.plus, in.masks, in.out, in.out_plus);
        benchmark::DoNotOptimize(in.out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BitlineParallel(benchmark::State& state) {
    BitlineInputs in(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        kernels::bitline_sums_parallel(in.net, in.plus, in.masks, in.out, in.out_plus);
        benchmark::DoNotOptimize(in.out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

// The sweep measures its lanes in an OpenMP loop; one family keeps it short.
void BM_Sweep(benchmark::State& state) {
    report::SweepSpec spec;
    spec.families = {dce::LogicFamily::Oscar};
    for (auto _ : state) benchmark::DoNotOptimize(report::run_sweep(spec));
}

}  // namespace

BENCHMARK(BM_BitlineSerial)->RangeMultiplier(8)->Range(64, 32768);
BENCHMARK(BM_BitlineParallel)->RangeMultiplier(8)->Range(64, 32768);
BENCHMARK(BM_Sweep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
