#include "mtsdiag/preprocess.hpp"

#include <cmath>

namespace mtsdiag {

NormStats compute_norm_stats(const SeriesMatrix& stats_source) {
    const Matrix& v = stats_source.values;
    const Index d = v.cols();
    const double n = static_cast<double>(v.rows());

    NormStats stats;
    stats.mean = v.colwise().mean();
    stats.std = Vector(d);
    stats.degenerate.assign(static_cast<std::size_t>(d), false);
    for (Index c = 0; c < d; ++c) {
        const double var = (v.col(c).array() - stats.mean(c)).square().sum() / n;
        stats.std(c) = std::sqrt(var);
        if (stats.std(c) < NormStats::kStdFloor) stats.degenerate[static_cast<std::size_t>(c)] = true;
    }
    return stats;
}

SeriesMatrix zscore_normalize(const SeriesMatrix& x, const NormStats& stats) {
    if (stats.mean.size() != x.dims())
        throw ConfigError("zscore_normalize: stats dimension mismatch");
    SeriesMatrix out = x;
    for (Index c = 0; c < x.dims(); ++c) {
        out.values.col(c).array() -= stats.mean(c);
        if (!stats.degenerate[static_cast<std::size_t>(c)])
            out.values.col(c) /= stats.std(c);
    }
    return out;
}

SeriesMatrix denormalize(const SeriesMatrix& x, const NormStats& stats) {
    if (stats.mean.size() != x.dims())
        throw ConfigError("denormalize: stats dimension mismatch");
    SeriesMatrix out = x;
    for (Index c = 0; c < x.dims(); ++c) {
        if (!stats.degenerate[static_cast<std::size_t>(c)])
            out.values.col(c) *= stats.std(c);
        out.values.col(c).array() += stats.mean(c);
    }
    return out;
}

std::vector<Matrix> window_split(const SeriesMatrix& x, Index T) {
    if (T < 1) throw ConfigError("window_split: window length must be >= 1");
    if (T > x.steps())
        throw ConfigError("window_split: window length " + std::to_string(T) +
                          " exceeds series length " + std::to_string(x.steps()));
    const Index count = x.steps() / T;
    std::vector<Matrix> windows;
    windows.reserve(static_cast<std::size_t>(count));
    for (Index w = 0; w < count; ++w)
        windows.push_back(x.values.middleRows(w * T, T));
    return windows;
}

} // namespace mtsdiag
