#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "loopforge/harness.hpp"
#include "loopforge/learning.hpp"
#include "loopforge/network.hpp"
#include "loopforge/plant.hpp"

using namespace loopforge;

namespace {

std::vector<double> random_input(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

void BM_Forward(benchmark::State& state) {
    const std::vector<std::size_t> sizes{8, static_cast<std::size_t>(state.range(0)), 4};
    const auto params = init_params(sizes, 1);
    const auto x = random_input(8, 2);
    for (auto _ : state) benchmark::DoNotOptimize(forward(params, x));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64);

void BM_Backward(benchmark::State& state) {
    const std::vector<std::size_t> sizes{8, static_cast<std::size_t>(state.range(0)), 4};
    const auto params = init_params(sizes, 1);
    const auto x = random_input(8, 2);
    const auto trace = forward(params, x);
    for (auto _ : state) benchmark::DoNotOptimize(backward(params, x, 2, -0.5, trace));
}
BENCHMARK(BM_Backward)->Arg(16)->Arg(64);

void BM_Softmax(benchmark::State& state) {
    const auto z = random_input(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(softmax(z));
}
BENCHMARK(BM_Softmax)->Arg(4)->Arg(64);

void BM_PlantStep(benchmark::State& state) {
    const PlantParameters params{};
    const std::vector<FaultEvent> faults;
    JointState s{0.0, 1.0};
    for (auto _ : state) {
        s = step(params, s, 0.5, faults);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_PlantStep);

void BM_RunEpisode(benchmark::State& state) {
    ScenarioConfig config;
    config.variant = state.range(0) == 0 ? ControllerVariant::fixed_baseline : ControllerVariant::adaptive;
    config.disturbance.bias_std = 0.5;
    config.disturbance.noise_std = 0.1;
    config.learning.decision_period_ticks = 10;
    for (auto _ : state) benchmark::DoNotOptimize(run_episode(config));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * config.total_ticks()));
}
BENCHMARK(BM_RunEpisode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
