#include "mtsdiag/localize.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "mtsdiag/detect.hpp"
#include "mtsdiag/errors.hpp"
#include "mtsdiag/features.hpp"
#include "mtsdiag/pca.hpp"

namespace mtsdiag {

namespace {

Vector concatenated_errors(const std::vector<Matrix>& windows, const ModelParams& params,
                           std::optional<Index> mask_series) {
    const Index T = params.config.T;
    Vector errors(static_cast<Index>(windows.size()) * T);
    for (std::size_t w = 0; w < windows.size(); ++w)
        errors.segment(static_cast<Index>(w) * T, T) =
            reconstruct(windows[w], params, mask_series).recon_error;
    return errors;
}

} // namespace

Vector stas_row(const Vector& deviations, const Matrix& weights, bool* degenerate) {
    const Index d = deviations.size();
    const Vector sq = deviations.array().square();
    const double denom = sq.sum();
    Vector out(d);
    if (denom < 1e-300) {
        out.setConstant(1.0 / static_cast<double>(d));
        if (degenerate) *degenerate = true;
        return out;
    }
    if (degenerate) *degenerate = false;
    for (Index i = 0; i < d; ++i) {
        double acc = sq(i);
        for (Index j = 0; j < d; ++j)
            if (j != i) acc += std::abs(weights(i, j)) * sq(j);
        out(i) = acc / denom;
    }
    return out;
}

StasResult stas_scores(const std::vector<Matrix>& windows, const ModelParams& params,
                       const CorrelationWeights& weights, const std::vector<Index>& steps) {
    if (windows.empty()) throw ConfigError("stas_scores: no windows");
    const Index d = params.config.d;
    if (weights.matrix.rows() != d || weights.matrix.cols() != d)
        throw ConfigError("stas_scores: weight matrix dimension mismatch");
    const Index covered = static_cast<Index>(windows.size()) * params.config.T;

    StasResult result;
    result.steps = steps;
    result.base_error = concatenated_errors(windows, params, std::nullopt);
    result.masked_errors = Matrix(covered, d);

    // The d masked passes share immutable params; each worker fills its own
    // columns so the result is order-independent.
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_workers = std::min<unsigned>(hw, static_cast<unsigned>(d));
    if (n_workers <= 1) {
        for (Index i = 0; i < d; ++i)
            result.masked_errors.col(i) = concatenated_errors(windows, params, i);
    } else {
        std::vector<std::thread> workers;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (unsigned w = 0; w < n_workers; ++w) {
            workers.emplace_back([&, w]() {
                try {
                    for (Index i = static_cast<Index>(w); i < d; i += static_cast<Index>(n_workers))
                        result.masked_errors.col(i) = concatenated_errors(windows, params, i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& t : workers) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    result.scores = Matrix(static_cast<Index>(steps.size()), d);
    for (std::size_t r = 0; r < steps.size(); ++r) {
        const Index t = steps[r];
        if (t < 0 || t >= covered) throw ConfigError("stas_scores: step out of covered range");
        const Vector deviations =
            result.masked_errors.row(t).transpose().array() - result.base_error(t);
        bool degenerate = false;
        result.scores.row(static_cast<Index>(r)) =
            stas_row(deviations, weights.matrix, &degenerate).transpose();
        if (degenerate) result.degenerate_steps.push_back(t);
    }
    return result;
}

BinaryVector threshold_stas(const Vector& scores_row, double h1_percentile) {
    std::vector<double> values(scores_row.data(), scores_row.data() + scores_row.size());
    const double threshold = percentile(std::move(values), h1_percentile);
    BinaryVector out = BinaryVector::Zero(scores_row.size());
    for (Index i = 0; i < scores_row.size(); ++i) out(i) = scores_row(i) > threshold ? 1 : 0;
    return out;
}

SfasResult sfas_scores(const Matrix& before, const Matrix& around) {
    if (before.cols() != around.cols()) throw ConfigError("sfas_scores: dimension mismatch");
    const Index d = before.cols();
    Matrix fb = feature_matrix(before).values;
    Matrix fa = feature_matrix(around).values;

    // Joint per-feature standardization over the 2d points, so no feature
    // dominates the PCA by scale alone.
    for (Index f = 0; f < kFeatureCount; ++f) {
        const double n = static_cast<double>(2 * d);
        const double mean = (fb.row(f).sum() + fa.row(f).sum()) / n;
        const double var = ((fb.row(f).array() - mean).square().sum() +
                            (fa.row(f).array() - mean).square().sum()) /
                           n;
        const double std = std::sqrt(var);
        fb.row(f).array() -= mean;
        fa.row(f).array() -= mean;
        if (std >= 1e-12) {
            fb.row(f) /= std;
            fa.row(f) /= std;
        }
    }

    const PcaBasis basis = pca_fit(fb);
    const Matrix pb = pca_apply(basis, fb);
    const Matrix pa = pca_apply(basis, fa);

    SfasResult result;
    result.basis_degenerate = basis.degenerate[0] || basis.degenerate[1];
    result.scores = (pb - pa).cwiseAbs().colwise().sum().transpose();
    return result;
}

LocalizationDecision combined_localization(const Vector& stas_row, const Vector& sfas_row,
                                           double h1_percentile, double h2_threshold) {
    const Index d = stas_row.size();
    if (sfas_row.size() != d) throw ConfigError("combined_localization: row length mismatch");

    LocalizationDecision decision;
    decision.c1 = threshold_stas(stas_row, h1_percentile);
    decision.c2 = BinaryVector::Zero(d);
    decision.combined = decision.c1;

    for (Index i = 0; i < d; ++i) {
        if (sfas_row(i) > h2_threshold && decision.c1(i) == 0) {
            decision.c2(i) = 1;
            decision.combined(i) = 1;
            ++decision.corrections;
        }
    }

    // Clear the p C1-anomalous series with the lowest STAS (ties: lower index).
    std::vector<Index> anomalous;
    for (Index i = 0; i < d; ++i)
        if (decision.c1(i) == 1) anomalous.push_back(i);
    std::stable_sort(anomalous.begin(), anomalous.end(),
                     [&](Index a, Index b) { return stas_row(a) < stas_row(b); });
    const Index to_clear = std::min<Index>(decision.corrections, static_cast<Index>(anomalous.size()));
    if (decision.corrections > static_cast<Index>(anomalous.size())) decision.shortfall = true;
    for (Index j = 0; j < to_clear; ++j) decision.combined(anomalous[static_cast<std::size_t>(j)]) = 0;
    return decision;
}

Vector window_localize(const Matrix& step_scores, Index t, Index w1, Index w2, WindowAgg agg) {
    if (w1 < 0 || w2 < 0) throw ConfigError("window_localize: window sizes must be >= 0");
    const Index T = step_scores.rows();
    if (t < 0 || t >= T) throw ConfigError("window_localize: step out of range");
    const Index lo = std::max<Index>(0, t - w1);
    const Index hi = std::min<Index>(T - 1, t + w2);
    const auto block = step_scores.middleRows(lo, hi - lo + 1);
    if (agg == WindowAgg::Max) return block.colwise().maxCoeff().transpose();
    return block.colwise().mean().transpose();
}

SegmentWindows derive_segment_windows(Index seg_start, Index seg_end, Index w2,
                                      Index total_steps) {
    if (seg_start < 0 || seg_end < seg_start || seg_end >= total_steps)
        throw ConfigError("derive_segment_windows: segment out of range");
    if (total_steps < 8)
        throw ConfigError("derive_segment_windows: stream too short for feature windows");

    SegmentWindows w;
    w.around_start = std::max<Index>(0, seg_start - w2);
    w.around_end = std::min<Index>(total_steps - 1, seg_end + w2);
    // Feature extraction needs at least 4 steps.
    while (w.around_end - w.around_start + 1 < 4) {
        if (w.around_end < total_steps - 1)
            ++w.around_end;
        else
            --w.around_start;
    }

    const Index len = w.around_end - w.around_start + 1;
    if (w.around_start >= 4) {
        w.before_end = w.around_start - 1;
        w.before_start = std::max<Index>(0, w.before_end - len + 1);
        if (w.before_end - w.before_start + 1 < len) w.shortened = true;
    } else {
        // Segment at the stream start: no room for a preceding window.
        w.before_start = 0;
        w.before_end = 3;
        w.shortened = true;
        w.overlaps = true;
    }
    return w;
}

LocalizationDecision segment_localize(const Matrix& step_scores, const Segment& segment,
                                      const Vector& sfas_row, double h1_percentile,
                                      double h2_threshold) {
    if (segment.start < 0 || segment.end < segment.start || segment.end >= step_scores.rows())
        throw ConfigError("segment_localize: segment out of score range");
    const Vector stas = step_scores.middleRows(segment.start, segment.length())
                            .colwise()
                            .maxCoeff()
                            .transpose();
    return combined_localization(stas, sfas_row, h1_percentile, h2_threshold);
}

} // namespace mtsdiag
