#include <benchmark/benchmark.h>

#include "mtsdiag/model.hpp"
#include "mtsdiag/rng.hpp"

using namespace mtsdiag;

namespace {

ModelConfig desk_config() {
    ModelConfig c;
    c.d = 10;
    c.d_model = 64;
    c.H = 4;
    c.L = 2;
    c.T = 50;
    c.seed = 1;
    return c;
}

Matrix random_window(const ModelConfig& c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(c.T, c.d);
    for (Index t = 0; t < c.T; ++t)
        for (Index j = 0; j < c.d; ++j) x(t, j) = rng.normal();
    return x;
}

void BM_encode_window(benchmark::State& state) {
    const ModelConfig config = desk_config();
    const ModelParams params = init_model(config);
    const Matrix x = random_window(config, 3);
    for (auto _ : state) {
        const EncodeOutput out = encode_window(x, params);
        benchmark::DoNotOptimize(out.x_hat.data());
    }
}
BENCHMARK(BM_encode_window);

void BM_loss_and_gradients(benchmark::State& state) {
    const ModelConfig config = desk_config();
    const ModelParams params = init_model(config);
    ModelParams grads = zeros_like(params);
    const Matrix x = random_window(config, 4);
    for (auto _ : state) {
        const WindowLoss loss = loss_and_gradients(x, params, grads);
        benchmark::DoNotOptimize(loss.total);
    }
}
BENCHMARK(BM_loss_and_gradients);

void BM_encode_paper_scale(benchmark::State& state) {
    ModelConfig config;
    config.d = 10;
    config.d_model = 512;
    config.H = 8;
    config.L = 3;
    config.T = 100;
    config.seed = 2;
    const ModelParams params = init_model(config);
    const Matrix x = random_window(config, 5);
    for (auto _ : state) {
        const EncodeOutput out = encode_window(x, params);
        benchmark::DoNotOptimize(out.x_hat.data());
    }
}
BENCHMARK(BM_encode_paper_scale)->Unit(benchmark::kMillisecond);

} // namespace
