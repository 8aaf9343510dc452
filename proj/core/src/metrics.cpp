#include "mtsdiag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "mtsdiag/errors.hpp"
#include "mtsdiag/detect.hpp"
#include "mtsdiag/localize.hpp"

namespace mtsdiag {

Prf point_metrics(const BinaryMatrix& pred, const BinaryMatrix& truth,
                  bool restrict_to_true_anomalous_steps) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw ConfigError("point_metrics: shape mismatch");
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (Index r = 0; r < pred.rows(); ++r) {
        if (restrict_to_true_anomalous_steps && truth.row(r).sum() == 0) continue;
        for (Index c = 0; c < pred.cols(); ++c) {
            const bool p = pred(r, c) != 0;
            const bool t = truth(r, c) != 0;
            if (p && t)
                ++tp;
            else if (p && !t)
                ++fp;
            else if (!p && t)
                ++fn;
        }
    }
    Prf out;
    out.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    out.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    out.f1 = (out.precision + out.recall) > 0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

double auc(const Vector& scores, const BinaryVector& truth) {
    if (scores.size() != truth.size()) throw ConfigError("auc: length mismatch");
    const Index n = scores.size();
    std::int64_t n_pos = 0;
    for (Index i = 0; i < n; ++i) n_pos += truth(i) != 0 ? 1 : 0;
    const std::int64_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ConfigError("auc: truth must contain both classes");

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(),
              [&](Index a, Index b) { return scores(a) < scores(b); });

    // Average ranks across ties, then the Mann-Whitney identity.
    double rank_sum_pos = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores(order[j + 1]) == scores(order[i])) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (truth(order[k]) != 0) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double n_pos_d = static_cast<double>(n_pos);
    const double n_neg_d = static_cast<double>(n_neg);
    return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) / 2.0) / (n_pos_d * n_neg_d);
}

double ips(const std::vector<SegmentPrediction>& segments, Index* skipped) {
    if (segments.empty()) throw ConfigError("ips: need at least one segment");
    Index used = 0, skip = 0;
    double total = 0;
    for (const auto& seg : segments) {
        if (seg.truth_dims.empty()) {
            ++skip;
            continue;
        }
        std::int64_t hit = 0;
        for (Index dim : seg.truth_dims)
            if (std::find(seg.predicted_dims.begin(), seg.predicted_dims.end(), dim) !=
                seg.predicted_dims.end())
                ++hit;
        total += static_cast<double>(hit) / static_cast<double>(seg.truth_dims.size());
        ++used;
    }
    if (skipped) *skipped = skip;
    if (used == 0) throw ConfigError("ips: every segment has empty ground truth");
    return total / static_cast<double>(used);
}

std::vector<SweepRow> sweep_windows(const Matrix& step_scores, const BinaryMatrix& dim_truth,
                                    const std::vector<Segment>& segments,
                                    const std::vector<double>& pcts, Index w2) {
    if (step_scores.rows() != dim_truth.rows() || step_scores.cols() != dim_truth.cols())
        throw ConfigError("sweep_windows: score/truth shape mismatch");
    const Index d = step_scores.cols();

    // Thresholds are pinned per step from the unaggregated scores, so widening
    // the window can only add predictions (max aggregation is monotone).
    std::vector<SweepRow> rows;
    for (double pct : pcts) {
        BinaryMatrix pred = BinaryMatrix::Zero(dim_truth.rows(), d);
        std::vector<double> cell_scores;
        std::vector<int> cell_truth;
        for (const Segment& seg : segments) {
            const auto w1 =
                static_cast<Index>(std::lround(pct / 100.0 * static_cast<double>(seg.length())));
            for (Index t = seg.start; t <= seg.end; ++t) {
                const Vector was = window_localize(step_scores, t, w1, w2, WindowAgg::Max);
                const Index a_t = dim_truth.row(t).sum();
                const double h1 =
                    100.0 * (1.0 - static_cast<double>(a_t) / static_cast<double>(d));
                std::vector<double> step_row(static_cast<std::size_t>(d));
                for (Index c = 0; c < d; ++c) step_row[static_cast<std::size_t>(c)] = step_scores(t, c);
                const double threshold = percentile(std::move(step_row), h1);
                for (Index c = 0; c < d; ++c) {
                    pred(t, c) = was(c) > threshold ? 1 : 0;
                    cell_scores.push_back(was(c));
                    cell_truth.push_back(dim_truth(t, c));
                }
            }
        }
        const Prf prf = point_metrics(pred, dim_truth, /*restrict=*/true);
        SweepRow row;
        row.window_pct = pct;
        row.precision = prf.precision;
        row.recall = prf.recall;
        row.f1 = prf.f1;
        row.auc = std::numeric_limits<double>::quiet_NaN();
        if (!cell_scores.empty()) {
            Vector s(static_cast<Index>(cell_scores.size()));
            BinaryVector y(static_cast<Index>(cell_truth.size()));
            for (std::size_t i = 0; i < cell_scores.size(); ++i) {
                s(static_cast<Index>(i)) = cell_scores[i];
                y(static_cast<Index>(i)) = cell_truth[i];
            }
            try {
                row.auc = auc(s, y);
            } catch (const ConfigError&) {
                // single-class cells; leave NaN
            }
        }
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write sweep table: " + path.string());
    out << "window_pct,precision,recall,f1,auc\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.window_pct << "," << r.precision << "," << r.recall << "," << r.f1 << "," << r.auc
            << "\n";
}

} // namespace mtsdiag
