#include <doctest.h>

#include <cmath>

#include "mtsdiag/detect.hpp"
#include "mtsdiag/rng.hpp"
#include "test_util.hpp"

using namespace mtsdiag;

TEST_CASE("anomaly_score: uniform divergence divides by T") {
    Vector e(4);
    e << 1, 2, 3, 4;
    const Vector as = anomaly_score(e, Vector::Constant(4, 0.7));
    for (Index t = 0; t < 4; ++t) CHECK(as(t) == doctest::Approx(e(t) / 4.0).epsilon(1e-12));
}

TEST_CASE("anomaly_score: zero errors annihilate") {
    Vector d_div(3);
    d_div << 0.1, 0.2, 0.3;
    const Vector as = anomaly_score(Vector::Zero(3), d_div);
    CHECK(as.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("anomaly_score: hand-computed softmax") {
    Vector e = Vector::Ones(2);
    Vector d_div(2);
    d_div << 0.0, std::log(3.0);
    const Vector as = anomaly_score(e, d_div);
    CHECK(as(0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(as(1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(anomaly_score(Vector::Zero(3), d_div), ConfigError);
}

TEST_CASE("anomaly_score: softmax weights sum to one and are monotone in E") {
    Rng rng(8);
    Vector e = testutil::random_matrix(50, 1, rng, 0, 2).col(0);
    Vector d_div = testutil::random_matrix(50, 1, rng, 0, 1).col(0);
    const Vector as = anomaly_score(e, d_div);
    const Vector weights = anomaly_score(Vector::Ones(50), d_div);
    CHECK(weights.sum() == doctest::Approx(1.0).epsilon(1e-9));

    Vector e2 = e;
    e2(17) += 1.0;
    const Vector as2 = anomaly_score(e2, d_div);
    CHECK(as2(17) >= as(17));
}

TEST_CASE("fir_cusum: fixed point at zero") {
    DetectionConfig config;
    config.K = 0;
    config.b = 0;
    const Vector cs = fir_cusum(Vector::Zero(5), config);
    CHECK(cs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fir_cusum: hand-unrolled recursion") {
    DetectionConfig config;
    config.K = 1;
    config.b = 0;
    Vector as(3);
    as << 5, 0, 0;
    const Vector cs = fir_cusum(as, config);
    CHECK(cs(0) == 4.0);
    CHECK(cs(1) == 3.0);
    CHECK(cs(2) == 2.0);
}

TEST_CASE("fir_cusum: nonnegative and matches an independent recursion") {
    Rng rng(9);
    DetectionConfig config;
    config.K = 0.4;
    config.b = 0.2;
    config.mu = 0.1;
    for (int rep = 0; rep < 50; ++rep) {
        const Index n = 1 + static_cast<Index>(rng.next_u64() % 1000);
        Vector as(n);
        for (Index t = 0; t < n; ++t) as(t) = rng.uniform(-1, 2);
        const Vector cs = fir_cusum(as, config);
        double prev = config.b;
        for (Index t = 0; t < n; ++t) {
            const double expected = std::max(0.0, as(t) - (config.mu + config.K) + prev);
            CHECK(cs(t) == expected);
            CHECK(cs(t) >= 0.0);
            prev = expected;
        }
    }
}

TEST_CASE("fir_cusum: per-window reset ablation") {
    DetectionConfig config;
    config.K = 0;
    config.b = 1;
    config.reset_per_window = true;
    config.window_length = 2;
    Vector as(4);
    as << 1, 1, 1, 1;
    const Vector cs = fir_cusum(as, config);
    CHECK(cs(0) == 2.0);
    CHECK(cs(1) == 3.0);
    CHECK(cs(2) == 2.0); // head start re-applied at the window boundary
    CHECK(cs(3) == 3.0);
}

TEST_CASE("calibrate_sigma: hand computation and degenerate case") {
    DetectionConfig config;
    config.K = 0;
    config.b = 0;

    Vector train(2);
    train << 0, 2;
    // CS = [0, 2], population std = 1.
    const Calibration cal = calibrate_sigma(train, config);
    CHECK(cal.sigma == doctest::Approx(1.0).epsilon(1e-12));

    const Calibration flat = calibrate_sigma(Vector::Zero(10), config);
    CHECK(flat.sigma == 0.0);
    CHECK(flat.fallback_threshold > 0.0);

    CHECK_THROWS_AS(calibrate_sigma(Vector(), config), ConfigError);
}

TEST_CASE("calibrate_sigma: stream order matters without per-window reset") {
    DetectionConfig config;
    config.K = 0.5;
    config.b = 0;
    Vector a(4), b(4);
    a << 2, 2, 0, 0;
    b << 0, 0, 2, 2;
    CHECK(calibrate_sigma(a, config).sigma != calibrate_sigma(b, config).sigma);
}

TEST_CASE("detect: thresholding and segments") {
    DetectionConfig config;
    config.K = 0;
    config.b = 0;
    config.n = 3;

    Calibration cal;
    cal.sigma = 1.0;

    // Feed CS directly by zero slack: scores == CS deltas chosen so the
    // cusum matches [0, 4, 4, 0].
    Vector as(4);
    as << 0, 4, 0, -4;
    const DetectionResult result = detect(as, cal, config);
    CHECK(result.threshold == 3.0);
    CHECK(result.cusum(0) == 0.0);
    CHECK(result.cusum(1) == 4.0);
    CHECK(result.cusum(2) == 4.0);
    CHECK(result.cusum(3) == 0.0);
    CHECK(result.flags(0) == 0);
    CHECK(result.flags(1) == 1);
    CHECK(result.flags(2) == 1);
    CHECK(result.flags(3) == 0);
    REQUIRE(result.segments.size() == 1);
    CHECK(result.segments[0].start == 1);
    CHECK(result.segments[0].end == 2);

    // Threshold above the max: nothing flagged.
    cal.sigma = 10.0;
    const DetectionResult none = detect(as, cal, config);
    CHECK(none.flags.sum() == 0);
    CHECK(none.segments.empty());
}

TEST_CASE("detect: flags reconstructed from segments equal returned flags") {
    Rng rng(10);
    DetectionConfig config;
    config.K = 0.3;
    config.b = 0;
    config.n = 1;
    Calibration cal;
    cal.sigma = 0.5;
    Vector as(200);
    for (Index t = 0; t < 200; ++t) as(t) = rng.uniform(-0.5, 1.0);
    const DetectionResult result = detect(as, cal, config);
    BinaryVector rebuilt = BinaryVector::Zero(200);
    for (const Segment& seg : result.segments)
        for (Index t = seg.start; t <= seg.end; ++t) rebuilt(t) = 1;
    CHECK(rebuilt == result.flags);
}

TEST_CASE("percentile: linear interpolation between order statistics") {
    std::vector<double> row = {0.9, 0.6, 0.1, 0.1};
    CHECK(percentile(row, 75.0) == doctest::Approx(0.675).epsilon(1e-12));
    CHECK(percentile(row, 0.0) == doctest::Approx(0.1));
    CHECK(percentile(row, 100.0) == doctest::Approx(0.9));
    CHECK_THROWS_AS(percentile({}, 50.0), ConfigError);
    CHECK_THROWS_AS(percentile({1.0}, 101.0), ConfigError);
}
