// Optimized (OpenMP) network passes against the serial reference, plus the
// k-DPP sampler at client counts used in experiments.

#include <benchmark/benchmark.h>

#include "dppfl/dataset.hpp"
#include "dppfl/dpp.hpp"
#include "dppfl/nn.hpp"

using namespace dppfl;

namespace {

struct Inputs {
    nn::ModelParams params;
    Tensor batch;
    std::vector<int> labels;
};

Inputs make_inputs(std::size_t n) {
    const auto ds = data::synth_dataset(n, 10, 1);
    return {nn::init_params(nn::Architecture{}, nn::InitScheme::kaiming_normal, 1), ds.samples, ds.labels};
}

void BM_Forward(benchmark::State& state) {
    const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(nn::forward(in.params, in.batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ForwardReference(benchmark::State& state) {
    const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(nn::reference::forward(in.params, in.batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LossAndGrad(benchmark::State& state) {
    const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(nn::loss_and_grad(in.params, in.batch, in.labels));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LossAndGradReference(benchmark::State& state) {
    const auto in = make_inputs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(nn::reference::loss_and_grad(in.params, in.batch, in.labels));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_KdppSample(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const dpp::KdppSampler sampler(dpp::random_psd_kernel(n, 3));
    auto rng = make_rng(3, Stream::selection);
    for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(n / 5, rng));
}

void BM_KdppSetup(benchmark::State& state) {
    const auto l = dpp::random_psd_kernel(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(dpp::KdppSampler(l));
}

}  // namespace

BENCHMARK(BM_Forward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardReference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossAndGrad)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossAndGradReference)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KdppSample)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KdppSetup)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
