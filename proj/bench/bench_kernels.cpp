// Serial reference vs OpenMP gradient kernel, plus the forward pass and a full training update.
#include <benchmark/benchmark.h>

#include <vector>

#include "hwymarl/ma2c.hpp"
#include "hwymarl/nn.hpp"

using namespace hwy;

namespace {

std::vector<nn::Sample> make_batch(std::size_t n) {
    Rng rng(7);
    std::vector<nn::Sample> batch;
    for (std::size_t i = 0; i < n; ++i) {
        Observation o(5);
        for (double& x : o.data) x = rng.uniform(-1.0, 1.0);
        batch.push_back({o, static_cast<int>(rng.uniform_int(0, 4)), rng.uniform(-1, 1), rng.uniform(-2, 2)});
    }
    return batch;
}

nn::NetworkParams make_params() {
    Rng rng(3);
    return nn::NetworkParams::initialized(nn::Architecture{}, rng);
}

void BM_forward(benchmark::State& state) {
    const auto params = make_params();
    const auto batch = make_batch(1);
    for (auto _ : state) benchmark::DoNotOptimize(nn::forward(params, batch[0].obs));
}
BENCHMARK(BM_forward);

void BM_backward_serial(benchmark::State& state) {
    const auto params = make_params();
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(nn::backward_serial(params, batch, {}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_backward_serial)->Arg(64)->Arg(320);

void BM_backward_parallel(benchmark::State& state) {
    const auto params = make_params();
    const auto batch = make_batch(static_cast<std::size_t>(state.range(0)));
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(nn::backward_parallel(params, batch, {}, threads));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_backward_parallel)->Args({64, 1})->Args({64, 4})->Args({320, 1})->Args({320, 4});

void BM_train_steps(benchmark::State& state) {
    TrainConfig cfg;
    cfg.hp.total_steps = 1000;
    cfg.hp.eval_every = 1000000;
    cfg.hp.eval_episodes = 1;
    cfg.hp.threads = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(train(cfg).steps);
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_train_steps)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
