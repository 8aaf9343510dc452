#pragma once

#include <vector>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

// Per-series mean/std taken from a stats source (train statistics applied to
// test). Columns with std below `kStdFloor` are centered only.
struct NormStats {
    Vector mean;
    Vector std;                     // population std
    std::vector<bool> degenerate;   // std < kStdFloor, centered only

    static constexpr double kStdFloor = 1e-12;
};

NormStats compute_norm_stats(const SeriesMatrix& stats_source);

SeriesMatrix zscore_normalize(const SeriesMatrix& x, const NormStats& stats);

inline std::pair<SeriesMatrix, NormStats> zscore_normalize(const SeriesMatrix& x,
                                                           const SeriesMatrix& stats_source) {
    NormStats stats = compute_norm_stats(stats_source);
    if (stats_source.dims() != x.dims())
        throw ConfigError("zscore_normalize: stats source has different dimension");
    return {zscore_normalize(x, stats), stats};
}

SeriesMatrix denormalize(const SeriesMatrix& x, const NormStats& stats);

// floor(T_total/T) full windows in order; a trailing partial window is
// dropped. Throws if T exceeds the series length.
std::vector<Matrix> window_split(const SeriesMatrix& x, Index T);

} // namespace mtsdiag
