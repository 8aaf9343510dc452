#include <doctest.h>

#include <cmath>

#include "mtsdiag/features.hpp"
#include "mtsdiag/localize.hpp"
#include "mtsdiag/pca.hpp"
#include "test_util.hpp"

using namespace mtsdiag;

// ---------------------------------------------------------------- correlation

TEST_CASE("spearman: monotone transform gives 1") {
    std::vector<double> x = {0.3, 1.2, -0.5, 2.0, 0.9};
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 * v + 1.0);
    CHECK(spearman(x, y) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spearman: hand-ranked example") {
    CHECK(spearman({1, 2, 3}, {3, 1, 2}) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("spearman: independent noise is near zero") {
    Rng rng_a(100), rng_b(200);
    std::vector<double> a(10000), b(10000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng_a.normal();
        b[i] = rng_b.normal();
    }
    CHECK(std::abs(spearman(a, b)) < 0.05);
}

namespace {

// O(n^2) reference for tau-b.
double kendall_brute(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0 && db == 0) continue;
            if (da == 0) {
                ++ties_a;
            } else if (db == 0) {
                ++ties_b;
            } else if (da * db > 0) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
    double joint = n0 - concordant - discordant - ties_a - ties_b;
    const double denom = std::sqrt((n0 - (ties_a + joint)) * (n0 - (ties_b + joint)));
    if (denom == 0) return 0;
    return (concordant - discordant) / denom;
}

} // namespace

TEST_CASE("kendall tau-b matches the pairwise oracle, ties included") {
    Rng rng(12);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 2 + rng.next_u64() % 60;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse grid forces plenty of ties.
            a[i] = std::floor(rng.uniform(-3, 3));
            b[i] = std::floor(rng.uniform(-3, 3));
        }
        const double fast = kendall_tau_b(a, b);
        const double slow = kendall_brute(a, b);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
}

TEST_CASE("correlation_weights: symmetric, unit diagonal, constant series recorded") {
    Rng rng(13);
    SeriesMatrix train;
    train.values = testutil::random_matrix(200, 4, rng);
    train.values.col(2).setConstant(3.0);
    train.names = default_names(4);

    for (const auto method : {CorrelationMethod::Spearman, CorrelationMethod::Kendall}) {
        const CorrelationWeights w = correlation_weights(train, method);
        CHECK(w.matrix == w.matrix.transpose());
        for (Index i = 0; i < 4; ++i) CHECK(w.matrix(i, i) == 1.0);
        CHECK(w.matrix.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
        REQUIRE(w.degenerate == std::vector<Index>{2});
        for (Index j = 0; j < 4; ++j)
            if (j != 2) CHECK(w.matrix(2, j) == 0.0);
    }
}

// ---------------------------------------------------------------- STAS

TEST_CASE("stas_row: hand example") {
    Vector deviations(2);
    deviations << 2, 1;
    Matrix w(2, 2);
    w << 1, 0.5, 0.5, 1;
    const Vector scores = stas_row(deviations, w);
    CHECK(scores(0) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(scores(1) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("stas_row: zero off-diagonal weights normalize to one") {
    Rng rng(14);
    for (int rep = 0; rep < 20; ++rep) {
        Vector deviations(6);
        for (Index i = 0; i < 6; ++i) deviations(i) = rng.uniform(-2, 2);
        if (deviations.cwiseAbs().maxCoeff() == 0.0) continue;
        const Vector scores = stas_row(deviations, Matrix::Identity(6, 6));
        CHECK(scores.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("stas_row: invariant under positive scaling of deviations") {
    Rng rng(15);
    Vector deviations(5);
    Matrix w(5, 5);
    for (Index i = 0; i < 5; ++i) {
        deviations(i) = rng.uniform(-1, 1);
        for (Index j = 0; j < 5; ++j) w(i, j) = rng.uniform(-1, 1);
    }
    const Vector base = stas_row(deviations, w);
    for (double c : {0.5, 3.0, 117.0}) {
        const Vector scaled = stas_row((c * deviations).eval(), w);
        CHECK((scaled - base).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("stas_row: zero denominator falls back to uniform") {
    bool degenerate = false;
    const Vector scores = stas_row(Vector::Zero(4), Matrix::Identity(4, 4), &degenerate);
    CHECK(degenerate);
    for (Index i = 0; i < 4; ++i) CHECK(scores(i) == doctest::Approx(0.25));
}

TEST_CASE("stas_scores: masked passes match direct reconstruction") {
    ModelConfig config;
    config.d = 4;
    config.d_model = 8;
    config.H = 2;
    config.L = 1;
    config.T = 6;
    config.seed = 19;
    const ModelParams params = init_model(config);

    Rng rng(20);
    std::vector<Matrix> windows;
    for (int w = 0; w < 3; ++w) windows.push_back(testutil::random_matrix(config.T, config.d, rng));

    CorrelationWeights weights;
    weights.matrix = Matrix::Identity(4, 4);

    const StasResult result = stas_scores(windows, params, weights, {0, 5, 11});
    CHECK(result.scores.rows() == 3);
    CHECK(result.base_error.size() == 18);

    // Column i of masked_errors equals a sequential masked pass.
    for (Index i = 0; i < config.d; ++i) {
        for (std::size_t w = 0; w < windows.size(); ++w) {
            const Reconstruction rec = reconstruct(windows[w], params, i);
            for (Index t = 0; t < config.T; ++t)
                CHECK(result.masked_errors(static_cast<Index>(w) * config.T + t, i) ==
                      rec.recon_error(t));
        }
    }

    // Repeat call is bit-identical (thread scheduling cannot change results).
    const StasResult again = stas_scores(windows, params, weights, {0, 5, 11});
    CHECK(again.scores == result.scores);
    CHECK(again.masked_errors == result.masked_errors);

    CHECK_THROWS_AS(stas_scores(windows, params, weights, {18}), ConfigError);
}

// ---------------------------------------------------------------- thresholds

TEST_CASE("threshold_stas: percentile zero flags everything above the minimum") {
    Vector row(4);
    row << 0.5, 0.2, 0.2, 0.9;
    const BinaryVector c = threshold_stas(row, 0.0);
    CHECK(c(0) == 1);
    CHECK(c(1) == 0); // ties at the minimum excluded, strict >
    CHECK(c(2) == 0);
    CHECK(c(3) == 1);
}

TEST_CASE("threshold_stas: interpolated percentile flags only the top cell") {
    Vector row(4);
    row << 0.9, 0.6, 0.1, 0.1;
    const BinaryVector c = threshold_stas(row, 75.0); // a_t=1, d=4
    CHECK(c(0) == 1);
    CHECK(c(1) == 0);
    CHECK(c(2) == 0);
    CHECK(c(3) == 0);
}

TEST_CASE("threshold_stas: constant row flags nothing") {
    const BinaryVector c = threshold_stas(Vector::Constant(5, 0.3), 40.0);
    CHECK(c.sum() == 0);
}

// ---------------------------------------------------------------- features

TEST_CASE("feature_matrix: constant window falls back to zeros") {
    const Matrix window = Matrix::Constant(20, 2, 5.0);
    const FeatureMatrix f = feature_matrix(window);
    CHECK(f.values(0, 0) == 0.0); // variance
    CHECK(f.values(1, 0) == 0.0); // trend strength
    CHECK(f.values(4, 0) == 0.0); // seasonal strength
    CHECK(f.values(5, 0) == 5.0); // mean
    CHECK(f.values(7, 0) == 0.0); // first acf
    CHECK_THROWS_AS(feature_matrix(Matrix::Zero(3, 2)), ConfigError);
}

TEST_CASE("feature_matrix: pure line has trend strength 1 and no curvature") {
    Vector x(50);
    for (Index t = 0; t < 50; ++t) x(t) = static_cast<double>(t);
    CHECK(trend_strength(x) == doctest::Approx(1.0).epsilon(1e-12));
    const auto [linearity, curvature] = poly_coefficients(x);
    CHECK(std::abs(curvature) < 1e-9);
    CHECK(linearity > 0.0);
}

TEST_CASE("feature_matrix: sine window has strong seasonality at its period") {
    Vector x(100);
    for (Index t = 0; t < 100; ++t)
        x(t) = std::sin(2.0 * 3.14159265358979323846 * static_cast<double>(t) / 10.0);
    CHECK(dominant_period(x) == 10);
    CHECK(seasonal_strength(x) > 0.99);
}

TEST_CASE("feature_matrix: first_acf of alternating series is negative") {
    Vector x(40);
    for (Index t = 0; t < 40; ++t) x(t) = (t % 2 == 0) ? 1.0 : -1.0;
    CHECK(first_acf(x) < -0.9);
}

// ---------------------------------------------------------------- PCA

TEST_CASE("pca: points in a 2-D plane project isometrically") {
    Rng rng(23);
    const Index k = 5, d = 8;
    // Orthonormal basis of a random plane.
    Vector u = testutil::random_matrix(k, 1, rng).col(0).normalized();
    Vector v = testutil::random_matrix(k, 1, rng).col(0);
    v = (v - u * u.dot(v)).normalized();
    const Matrix coords = testutil::random_matrix(2, d, rng, -3, 3);
    Matrix points = u * coords.row(0) + v * coords.row(1);

    const Matrix projected = pca_project(points);
    for (Index i = 0; i < d; ++i)
        for (Index j = i + 1; j < d; ++j) {
            const double orig = (points.col(i) - points.col(j)).norm();
            const double proj = (projected.col(i) - projected.col(j)).norm();
            CHECK(std::abs(orig - proj) < 1e-9);
        }
}

TEST_CASE("pca: duplicate columns share projected coordinates") {
    Rng rng(24);
    Matrix points = testutil::random_matrix(4, 6, rng);
    points.col(5) = points.col(2);
    const Matrix projected = pca_project(points);
    CHECK((projected.col(5) - projected.col(2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pca: top-2 variance beats random 2-D projections") {
    Rng rng(25);
    const Matrix points = testutil::random_matrix(5, 6, rng, -2, 2);
    const Matrix centered = points.colwise() - Vector(points.rowwise().mean());

    const Matrix best = pca_project(points);
    const double var_pca = best.squaredNorm();

    for (int rep = 0; rep < 200; ++rep) {
        Vector a = testutil::random_matrix(5, 1, rng).col(0).normalized();
        Vector b = testutil::random_matrix(5, 1, rng).col(0);
        b = (b - a * a.dot(b)).normalized();
        const double var_random =
            (a.transpose() * centered).squaredNorm() + (b.transpose() * centered).squaredNorm();
        CHECK(var_pca >= var_random - 1e-9);
    }
}

TEST_CASE("pca: rank-deficient data zeroes the missing component") {
    Matrix points(3, 4);
    // All points on a line.
    for (Index i = 0; i < 4; ++i) points.col(i) = Vector::Constant(3, static_cast<double>(i));
    const PcaBasis basis = pca_fit(points);
    CHECK_FALSE(basis.degenerate[0]);
    CHECK(basis.degenerate[1]);
    CHECK(basis.components.col(1).cwiseAbs().maxCoeff() == 0.0);
}

// ---------------------------------------------------------------- SFAS

TEST_CASE("sfas_scores: identical windows give exactly zero") {
    Rng rng(26);
    const Matrix window = testutil::random_matrix(30, 5, rng);
    const SfasResult result = sfas_scores(window, window);
    CHECK(result.scores.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sfas_scores: a level shift dominates every other series") {
    Rng rng(27);
    const Matrix before = testutil::random_matrix(40, 5, rng);
    Matrix around = before;
    around.col(2).array() += 8.0;
    const SfasResult result = sfas_scores(before, around);
    CHECK(result.scores.minCoeff() >= 0.0);
    for (Index i = 0; i < 5; ++i)
        if (i != 2) CHECK(result.scores(2) > result.scores(i));
}

TEST_CASE("sfas_scores: swapping arguments refits the basis") {
    Rng rng(28);
    const Matrix before = testutil::random_matrix(25, 4, rng);
    Matrix around = before;
    around.col(1).array() *= 3.0;
    const SfasResult ab = sfas_scores(before, around);
    const SfasResult ba = sfas_scores(around, before);
    // Generally different because the basis follows the first argument.
    CHECK((ab.scores - ba.scores).cwiseAbs().maxCoeff() > 0.0);
}

// ---------------------------------------------------------------- Algorithm 1

TEST_CASE("combined_localization: no corrections when SFAS stays below threshold") {
    Vector stas(3), sfas(3);
    stas << 0.9, 0.2, 0.1;
    sfas << 0.1, 0.1, 0.1;
    const LocalizationDecision d = combined_localization(stas, sfas, 100.0 / 3.0, 0.5);
    CHECK(d.corrections == 0);
    CHECK(d.c2.sum() == 0);
    CHECK(d.combined == d.c1);
}

TEST_CASE("combined_localization: worked three-series example") {
    Vector stas(3), sfas(3);
    stas << 0.9, 0.2, 0.1;
    sfas << 0.0, 0.0, 1.0;
    // a_t = 2 of d = 3 => percentile 33.33..: C1 = [1,1,0].
    const LocalizationDecision d = combined_localization(stas, sfas, 100.0 / 3.0, 0.5);
    CHECK(d.c1(0) == 1);
    CHECK(d.c1(1) == 1);
    CHECK(d.c1(2) == 0);
    CHECK(d.corrections == 1);
    CHECK(d.c2(0) == 0);
    CHECK(d.c2(1) == 0);
    CHECK(d.c2(2) == 1);
    // Index 1 holds the lowest STAS among C1 anomalies and is cleared.
    CHECK(d.combined(0) == 1);
    CHECK(d.combined(1) == 0);
    CHECK(d.combined(2) == 1);
}

TEST_CASE("combined_localization: counting identity over random rows") {
    Rng rng(29);
    for (int rep = 0; rep < 500; ++rep) {
        const Index d = 2 + static_cast<Index>(rng.next_u64() % 8);
        Vector stas(d), sfas(d);
        for (Index i = 0; i < d; ++i) {
            stas(i) = rng.uniform(0, 1);
            sfas(i) = rng.uniform(0, 1);
        }
        const double h1 = rng.uniform(0, 100);
        const double h2 = rng.uniform(0, 1);
        const LocalizationDecision dec = combined_localization(stas, sfas, h1, h2);
        const Index ones_c1 = dec.c1.sum();
        const Index expected =
            ones_c1 + dec.corrections - std::min(dec.corrections, ones_c1);
        CHECK(dec.combined.sum() == expected);
        // Conservation: swaps, not additions, while p fits.
        if (dec.corrections <= ones_c1) CHECK(dec.combined.sum() == ones_c1);
    }
}

TEST_CASE("combined_localization: shortfall clears all C1 anomalies") {
    Vector stas = Vector::Constant(4, 0.25); // constant row -> C1 all zero
    Vector sfas(4);
    sfas << 0.9, 0.8, 0.0, 0.0;
    const LocalizationDecision d = combined_localization(stas, sfas, 50.0, 0.5);
    CHECK(d.c1.sum() == 0);
    CHECK(d.corrections == 2);
    CHECK(d.shortfall);
    CHECK(d.combined.sum() == 2); // the C2 cells stay
}

TEST_CASE("combined_localization: ties cleared at the lower index first") {
    Vector stas(4), sfas(4);
    stas << 0.4, 0.4, 0.9, 0.05;
    sfas << 0, 0, 0, 1.0;
    // percentile 0 flags everything above the minimum: C1 = [1,1,1,0].
    const LocalizationDecision d = combined_localization(stas, sfas, 0.0, 0.5);
    CHECK(d.c1.sum() == 3);
    CHECK(d.corrections == 1);
    CHECK(d.combined(0) == 0); // tie with index 1, lower index cleared
    CHECK(d.combined(1) == 1);
    CHECK(d.combined(2) == 1);
    CHECK(d.combined(3) == 1);
}

// ---------------------------------------------------------------- windows

TEST_CASE("window_localize: degenerate window returns the row") {
    Rng rng(30);
    const Matrix scores = testutil::random_matrix(10, 3, rng);
    const Vector was = window_localize(scores, 4, 0, 0);
    CHECK((was.transpose() - scores.row(4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("window_localize: max over the enumerated window") {
    Matrix scores = Matrix::Zero(3, 1);
    scores(1, 0) = 5.0;
    CHECK(window_localize(scores, 1, 1, 1)(0) == 5.0);
    CHECK(window_localize(scores, 0, 1, 0)(0) == 0.0);
    CHECK(window_localize(scores, 2, 0, 1)(0) == 0.0);
}

TEST_CASE("window_localize: enlarging the window never decreases WAS") {
    Rng rng(31);
    const Matrix scores = testutil::random_matrix(40, 4, rng);
    for (Index t : {0, 10, 39}) {
        Vector prev = window_localize(scores, t, 0, 0);
        for (Index w = 1; w <= 10; ++w) {
            const Vector cur = window_localize(scores, t, w, w);
            for (Index i = 0; i < 4; ++i) CHECK(cur(i) >= prev(i));
            prev = cur;
        }
    }
}

// ---------------------------------------------------------------- segments

TEST_CASE("segment_localize: single-step segment equals time-step localization") {
    Rng rng(32);
    const Matrix scores = testutil::random_matrix(30, 4, rng, 0, 1);
    Segment seg;
    seg.start = 12;
    seg.end = 12;
    Vector sfas = testutil::random_matrix(4, 1, rng, 0, 1).col(0);
    const LocalizationDecision via_segment = segment_localize(scores, seg, sfas, 50.0, 0.7);
    const LocalizationDecision via_step =
        combined_localization(scores.row(12).transpose(), sfas, 50.0, 0.7);
    CHECK(via_segment.c1 == via_step.c1);
    CHECK(via_segment.combined == via_step.combined);
}

TEST_CASE("segment_localize: per-step max first gives identical decisions") {
    Rng rng(33);
    const Matrix scores = testutil::random_matrix(50, 5, rng, 0, 1);
    Segment seg;
    seg.start = 20;
    seg.end = 29;
    Vector sfas = testutil::random_matrix(5, 1, rng, 0, 1).col(0);

    const LocalizationDecision whole = segment_localize(scores, seg, sfas, 60.0, 0.8);
    Vector maxed = scores.row(seg.start).transpose();
    for (Index t = seg.start + 1; t <= seg.end; ++t)
        maxed = maxed.cwiseMax(scores.row(t).transpose());
    const LocalizationDecision stepwise = combined_localization(maxed, sfas, 60.0, 0.8);
    CHECK(whole.c1 == stepwise.c1);
    CHECK(whole.combined == stepwise.combined);
}

TEST_CASE("derive_segment_windows: before-window precedes and is shortened at the start") {
    const SegmentWindows w = derive_segment_windows(100, 140, 5, 1000);
    CHECK(w.around_start == 95);
    CHECK(w.around_end == 145);
    CHECK(w.before_end == 94);
    CHECK(w.before_start == 44);
    CHECK_FALSE(w.shortened);

    const SegmentWindows near_start = derive_segment_windows(10, 60, 5, 1000);
    CHECK(near_start.around_start == 5);
    CHECK(near_start.before_end == 4);
    CHECK(near_start.before_start == 0);
    CHECK(near_start.shortened);

    const SegmentWindows at_start = derive_segment_windows(0, 20, 2, 1000);
    CHECK(at_start.overlaps);
    CHECK(at_start.before_end - at_start.before_start + 1 >= 4);
}
