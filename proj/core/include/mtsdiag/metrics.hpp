#pragma once

#include <filesystem>
#include <vector>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

struct Prf {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

// Cell-wise counting over binary matrices. With the restrict flag only rows
// where the truth has at least one anomalous cell are counted (localization
// evaluation given anomalous intervals). Zero denominators give 0.
Prf point_metrics(const BinaryMatrix& pred, const BinaryMatrix& truth,
                  bool restrict_to_true_anomalous_steps);

// Rank-statistic ROC AUC: the probability a random positive outranks a
// random negative, ties counting one half. Throws on single-class truth.
double auc(const Vector& scores, const BinaryVector& truth);

struct SegmentPrediction {
    std::vector<Index> truth_dims;     // G_{S_i}
    std::vector<Index> predicted_dims; // P_{S_i}
};

// Equally weighted interpretation score; segments with empty ground truth
// are skipped and the weights renormalized (count reported via `skipped`).
double ips(const std::vector<SegmentPrediction>& segments, Index* skipped = nullptr);

struct SweepRow {
    double window_pct = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double auc = 0; // NaN when the cells are single-class
};

// Window-based localization sweep: per segment w1 = round(pct * length),
// max-aggregated scores at each ground-truth anomalous step, thresholded at
// the (1 - a_t/d) percentile. Pass w2 = 0 to make the 0% column coincide
// with time-step localization.
std::vector<SweepRow> sweep_windows(const Matrix& step_scores, const BinaryMatrix& dim_truth,
                                    const std::vector<Segment>& segments,
                                    const std::vector<double>& pcts, Index w2);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

} // namespace mtsdiag
