#pragma once

#include <optional>
#include <vector>

#include "mtsdiag/correlation.hpp"
#include "mtsdiag/model.hpp"
#include "mtsdiag/series.hpp"

namespace mtsdiag {

// Per-series anomaly scores from masked reconstruction passes. Steps index
// the concatenated window stream.
struct StasResult {
    std::vector<Index> steps;          // evaluated steps
    Matrix scores;                     // steps.size() x d
    Matrix masked_errors;              // T_covered x d, column i = E^(i)
    Vector base_error;                 // T_covered
    std::vector<Index> degenerate_steps; // zero denominator; row set to 1/d
};

// Runs one unmasked and d masked reconstruction passes over the windows
// (independent read-only evaluations, executed concurrently when hardware
// threads are available), then scores the requested steps.
StasResult stas_scores(const std::vector<Matrix>& windows, const ModelParams& params,
                       const CorrelationWeights& weights, const std::vector<Index>& steps);

// Scores a single step from precomputed error vectors (row t of the stream).
Vector stas_row(const Vector& base_error_row_deviations, const Matrix& weights,
                bool* degenerate = nullptr);

// Cell i set iff scores[i] strictly exceeds the given percentile of the row.
BinaryVector threshold_stas(const Vector& scores_row, double h1_percentile);

struct SfasResult {
    Vector scores; // length d, L1 displacement of PCA-projected features
    bool basis_degenerate = false;
};

// Statistical-feature displacement between a pre-anomaly window and a window
// around the anomaly. Features are standardized jointly; the PCA basis is
// fitted on the before-window points and applied to both.
SfasResult sfas_scores(const Matrix& before, const Matrix& around);

struct LocalizationDecision {
    BinaryVector c1;
    BinaryVector c2;
    BinaryVector combined;
    Index corrections = 0; // p
    bool shortfall = false; // p exceeded the number of C1 anomalies
};

LocalizationDecision combined_localization(const Vector& stas_row, const Vector& sfas_row,
                                           double h1_percentile, double h2_threshold);

enum class WindowAgg { Max, Mean };

// WAS_t^i = agg over tau in [t-w1, t+w2] (clipped to the score range).
Vector window_localize(const Matrix& step_scores, Index t, Index w1, Index w2,
                       WindowAgg agg = WindowAgg::Max);

// Around-window = segment padded by w2 on both sides; before-window = the
// equal-length window immediately preceding, shortened near the stream start
// (minimum 4 steps, flagged).
struct SegmentWindows {
    Index before_start = 0, before_end = 0;  // inclusive
    Index around_start = 0, around_end = 0;  // inclusive
    bool shortened = false;
    bool overlaps = false; // before-window had to overlap the around-window
};

SegmentWindows derive_segment_windows(Index seg_start, Index seg_end, Index w2, Index total_steps);

// STAS row = per-series max over the segment's steps of step_scores, then
// Algorithm 1 against the supplied SFAS row.
LocalizationDecision segment_localize(const Matrix& step_scores, const Segment& segment,
                                      const Vector& sfas_row, double h1_percentile,
                                      double h2_threshold);

} // namespace mtsdiag
