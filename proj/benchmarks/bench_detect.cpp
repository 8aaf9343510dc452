#include <benchmark/benchmark.h>

#include "mtsdiag/detect.hpp"
#include "mtsdiag/rng.hpp"

using namespace mtsdiag;

namespace {

Vector random_scores(Index n, std::uint64_t seed) {
    Rng rng(seed);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = rng.uniform(0, 1);
    return v;
}

void BM_fir_cusum(benchmark::State& state) {
    const Vector scores = random_scores(state.range(0), 11);
    DetectionConfig config;
    config.K = 0.3;
    for (auto _ : state) {
        const Vector cs = fir_cusum(scores, config);
        benchmark::DoNotOptimize(cs.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_fir_cusum)->Arg(1000)->Arg(100000);

void BM_anomaly_score(benchmark::State& state) {
    const Vector e = random_scores(state.range(0), 12);
    const Vector d_div = random_scores(state.range(0), 13);
    for (auto _ : state) {
        const Vector as = anomaly_score(e, d_div);
        benchmark::DoNotOptimize(as.data());
    }
}
BENCHMARK(BM_anomaly_score)->Arg(100)->Arg(10000);

void BM_calibrate_sigma(benchmark::State& state) {
    const Vector scores = random_scores(100000, 14);
    DetectionConfig config;
    config.K = 0.3;
    for (auto _ : state) {
        const Calibration cal = calibrate_sigma(scores, config);
        benchmark::DoNotOptimize(cal.sigma);
    }
}
BENCHMARK(BM_calibrate_sigma);

} // namespace
