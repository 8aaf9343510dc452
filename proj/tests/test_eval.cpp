#include <doctest.h>

#include <cmath>

#include "mtsdiag/localize.hpp"
#include "mtsdiag/metrics.hpp"
#include "test_util.hpp"

using namespace mtsdiag;

TEST_CASE("point_metrics: perfect prediction") {
    BinaryMatrix truth = BinaryMatrix::Zero(4, 3);
    truth(1, 0) = truth(2, 2) = 1;
    const Prf prf = point_metrics(truth, truth, false);
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall == 1.0);
    CHECK(prf.f1 == 1.0);
}

TEST_CASE("point_metrics: degenerate denominators use the zero convention") {
    BinaryMatrix truth = BinaryMatrix::Zero(3, 2);
    truth(0, 0) = 1;
    const BinaryMatrix pred = BinaryMatrix::Zero(3, 2);
    const Prf prf = point_metrics(pred, truth, false);
    CHECK(prf.precision == 0.0);
    CHECK(prf.recall == 0.0);
    CHECK(prf.f1 == 0.0);
}

TEST_CASE("point_metrics: hand-counted example") {
    // TP=2, FP=1, FN=1.
    BinaryMatrix truth = BinaryMatrix::Zero(1, 5);
    BinaryMatrix pred = BinaryMatrix::Zero(1, 5);
    truth(0, 0) = truth(0, 1) = truth(0, 2) = 1;
    pred(0, 0) = pred(0, 1) = pred(0, 3) = 1;
    const Prf prf = point_metrics(pred, truth, false);
    CHECK(prf.precision == doctest::Approx(2.0 / 3.0));
    CHECK(prf.recall == doctest::Approx(2.0 / 3.0));
    CHECK(prf.f1 == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("point_metrics: restriction to anomalous steps drops clean rows") {
    BinaryMatrix truth = BinaryMatrix::Zero(3, 2);
    truth(0, 0) = 1;
    BinaryMatrix pred = BinaryMatrix::Zero(3, 2);
    pred(0, 0) = 1;
    pred(2, 1) = 1; // false positive on a clean row
    const Prf all = point_metrics(pred, truth, false);
    const Prf restricted = point_metrics(pred, truth, true);
    CHECK(all.precision == doctest::Approx(0.5));
    CHECK(restricted.precision == 1.0);
    CHECK(restricted.recall == 1.0);

    CHECK_THROWS_AS(point_metrics(pred, BinaryMatrix::Zero(2, 2), false), ConfigError);
}

TEST_CASE("point_metrics: matches exhaustive counting on random matrices") {
    Rng rng(40);
    for (int rep = 0; rep < 50; ++rep) {
        BinaryMatrix truth(20, 5), pred(20, 5);
        for (Index r = 0; r < 20; ++r)
            for (Index c = 0; c < 5; ++c) {
                truth(r, c) = rng.uniform01() < 0.3 ? 1 : 0;
                pred(r, c) = rng.uniform01() < 0.3 ? 1 : 0;
            }
        double tp = 0, fp = 0, fn = 0;
        for (Index r = 0; r < 20; ++r)
            for (Index c = 0; c < 5; ++c) {
                tp += (pred(r, c) && truth(r, c)) ? 1 : 0;
                fp += (pred(r, c) && !truth(r, c)) ? 1 : 0;
                fn += (!pred(r, c) && truth(r, c)) ? 1 : 0;
            }
        const Prf prf = point_metrics(pred, truth, false);
        const double expect_p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double expect_r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        CHECK(prf.precision == doctest::Approx(expect_p).epsilon(1e-12));
        CHECK(prf.recall == doctest::Approx(expect_r).epsilon(1e-12));
    }
}

namespace {

// O(n^2) AUC oracle: P(random positive outranks random negative), ties 1/2.
double auc_brute(const Vector& scores, const BinaryVector& truth) {
    double wins = 0, pairs = 0;
    for (Index i = 0; i < scores.size(); ++i) {
        if (truth(i) == 0) continue;
        for (Index j = 0; j < scores.size(); ++j) {
            if (truth(j) != 0) continue;
            ++pairs;
            if (scores(i) > scores(j))
                wins += 1.0;
            else if (scores(i) == scores(j))
                wins += 0.5;
        }
    }
    return wins / pairs;
}

} // namespace

TEST_CASE("auc: perfect separation and all-ties") {
    Vector scores(4);
    BinaryVector truth(4);
    scores << 0, 0, 1, 1;
    truth << 0, 0, 1, 1;
    CHECK(auc(scores, truth) == 1.0);
    CHECK(auc(Vector::Constant(4, 0.5), truth) == 0.5);
}

TEST_CASE("auc: hand-enumerated pairs") {
    Vector scores(4);
    BinaryVector truth(4);
    scores << 0.1, 0.4, 0.35, 0.8;
    truth << 0, 0, 1, 1;
    CHECK(auc(scores, truth) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auc: single-class truth is an error") {
    CHECK_THROWS_AS(auc(Vector::Zero(3), BinaryVector::Zero(3)), ConfigError);
    CHECK_THROWS_AS(auc(Vector::Zero(3), BinaryVector::Ones(3)), ConfigError);
}

TEST_CASE("auc: matches the pairwise oracle exactly, ties included") {
    Rng rng(41);
    for (int rep = 0; rep < 40; ++rep) {
        const Index n = 2 + static_cast<Index>(rng.next_u64() % 499);
        Vector scores(n);
        BinaryVector truth(n);
        bool has_pos = false, has_neg = false;
        for (Index i = 0; i < n; ++i) {
            scores(i) = std::floor(rng.uniform(0, 6)) / 2.0; // heavy ties
            truth(i) = rng.uniform01() < 0.4 ? 1 : 0;
            has_pos = has_pos || truth(i) == 1;
            has_neg = has_neg || truth(i) == 0;
        }
        if (!has_pos) truth(0) = 1;
        if (!has_neg) truth(n - 1) = 0;
        CHECK(auc(scores, truth) == doctest::Approx(auc_brute(scores, truth)).epsilon(1e-12));
    }
}

TEST_CASE("ips: worked examples") {
    SegmentPrediction perfect;
    perfect.truth_dims = {1, 2};
    perfect.predicted_dims = {1, 2};
    CHECK(ips({perfect}) == 1.0);

    SegmentPrediction half;
    half.truth_dims = {1, 2};
    half.predicted_dims = {1};
    CHECK(ips({half}) == doctest::Approx(0.5));

    SegmentPrediction full;
    full.truth_dims = {0};
    full.predicted_dims = {0, 3};
    CHECK(ips({full, half}) == doctest::Approx(0.75));
}

TEST_CASE("ips: empty ground truth skipped with renormalized weights") {
    SegmentPrediction empty;
    empty.predicted_dims = {1};
    SegmentPrediction half;
    half.truth_dims = {1, 2};
    half.predicted_dims = {2};
    Index skipped = 0;
    CHECK(ips({empty, half}, &skipped) == doctest::Approx(0.5));
    CHECK(skipped == 1);
    CHECK_THROWS_AS(ips({empty}), ConfigError);
    CHECK_THROWS_AS(ips({}), ConfigError);
}

TEST_CASE("ips: bounds and the equality case") {
    Rng rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<SegmentPrediction> segs;
        bool all_covered = true;
        for (int s = 0; s < 4; ++s) {
            SegmentPrediction sp;
            for (Index i = 0; i < 6; ++i) {
                if (rng.uniform01() < 0.4) sp.truth_dims.push_back(i);
                if (rng.uniform01() < 0.4) sp.predicted_dims.push_back(i);
            }
            if (sp.truth_dims.empty()) sp.truth_dims.push_back(0);
            for (Index dim : sp.truth_dims)
                if (std::find(sp.predicted_dims.begin(), sp.predicted_dims.end(), dim) ==
                    sp.predicted_dims.end())
                    all_covered = false;
            segs.push_back(sp);
        }
        const double score = ips(segs);
        CHECK(score >= 0.0);
        CHECK(score <= 1.0);
        CHECK((score == 1.0) == all_covered);
    }
}

TEST_CASE("sweep_windows: zero window equals time-step metrics exactly") {
    Rng rng(43);
    const Index T = 60, d = 4;
    const Matrix scores = testutil::random_matrix(T, d, rng, 0, 1);
    BinaryMatrix truth = BinaryMatrix::Zero(T, d);
    for (Index t = 20; t <= 30; ++t) truth(t, 1) = 1;
    for (Index t = 45; t <= 50; ++t) {
        truth(t, 0) = 1;
        truth(t, 3) = 1;
    }
    BinaryVector point = BinaryVector::Zero(T);
    for (Index t = 0; t < T; ++t) point(t) = truth.row(t).sum() > 0 ? 1 : 0;
    const std::vector<Segment> segments = segments_from_labels(point, truth);

    const auto rows = sweep_windows(scores, truth, segments, {0, 25, 50, 75, 100}, 0);
    REQUIRE(rows.size() == 5);

    // Direct time-step metrics with the same evaluation-mode threshold.
    BinaryMatrix pred = BinaryMatrix::Zero(T, d);
    for (const Segment& seg : segments)
        for (Index t = seg.start; t <= seg.end; ++t) {
            const Index a_t = truth.row(t).sum();
            const double h1 = 100.0 * (1.0 - static_cast<double>(a_t) / static_cast<double>(d));
            pred.row(t) = threshold_stas(scores.row(t).transpose(), h1).transpose();
        }
    const Prf direct = point_metrics(pred, truth, true);
    CHECK(rows[0].precision == direct.precision);
    CHECK(rows[0].recall == direct.recall);
    CHECK(rows[0].f1 == direct.f1);

    // Max aggregation: recall never decreases with window length.
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].recall >= rows[i - 1].recall);
}

TEST_CASE("sweep_windows: full-length windows equal segment decisions on an isolated instance") {
    // Scores are zero outside the segment, so a look-back of the full
    // segment length reproduces the per-segment max at every step.
    const Index T = 40, d = 3;
    Matrix scores = Matrix::Zero(T, d);
    BinaryMatrix truth = BinaryMatrix::Zero(T, d);
    for (Index t = 10; t <= 19; ++t) {
        scores(t, 0) = 0.2 + 0.01 * static_cast<double>(t);
        scores(t, 1) = 0.9;
        scores(t, 2) = 0.1;
        truth(t, 1) = 1;
    }
    BinaryVector point = BinaryVector::Zero(T);
    for (Index t = 10; t <= 19; ++t) point(t) = 1;
    const std::vector<Segment> segments = segments_from_labels(point, truth);

    const auto rows = sweep_windows(scores, truth, segments, {100}, 0);
    const Vector seg_max = scores.middleRows(10, 10).colwise().maxCoeff().transpose();
    BinaryMatrix pred = BinaryMatrix::Zero(T, d);
    for (Index t = 10; t <= 19; ++t)
        pred.row(t) = threshold_stas(seg_max, 100.0 * (1.0 - 1.0 / 3.0)).transpose();
    const Prf direct = point_metrics(pred, truth, true);
    CHECK(rows[0].f1 == direct.f1);
}
