#include <benchmark/benchmark.h>

#include "mtsdiag/correlation.hpp"
#include "mtsdiag/features.hpp"
#include "mtsdiag/localize.hpp"
#include "mtsdiag/rng.hpp"

using namespace mtsdiag;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
    return m;
}

void BM_spearman_matrix(benchmark::State& state) {
    SeriesMatrix train;
    train.values = random_matrix(state.range(0), 10, 21);
    train.names = default_names(10);
    for (auto _ : state) {
        const CorrelationWeights w = correlation_weights(train, CorrelationMethod::Spearman);
        benchmark::DoNotOptimize(w.matrix.data());
    }
}
BENCHMARK(BM_spearman_matrix)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_kendall_matrix(benchmark::State& state) {
    SeriesMatrix train;
    train.values = random_matrix(state.range(0), 10, 22);
    train.names = default_names(10);
    for (auto _ : state) {
        const CorrelationWeights w = correlation_weights(train, CorrelationMethod::Kendall);
        benchmark::DoNotOptimize(w.matrix.data());
    }
}
BENCHMARK(BM_kendall_matrix)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_feature_matrix(benchmark::State& state) {
    const Matrix window = random_matrix(state.range(0), 10, 23);
    for (auto _ : state) {
        const FeatureMatrix f = feature_matrix(window);
        benchmark::DoNotOptimize(f.values.data());
    }
}
BENCHMARK(BM_feature_matrix)->Arg(16)->Arg(64)->Arg(256);

void BM_sfas_scores(benchmark::State& state) {
    const Matrix before = random_matrix(64, 10, 24);
    const Matrix around = random_matrix(64, 10, 25);
    for (auto _ : state) {
        const SfasResult r = sfas_scores(before, around);
        benchmark::DoNotOptimize(r.scores.data());
    }
}
BENCHMARK(BM_sfas_scores);

} // namespace
