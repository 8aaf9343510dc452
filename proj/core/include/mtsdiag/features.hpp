#pragma once

#include <string>
#include <vector>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

inline constexpr Index kFeatureCount = 8;

// Per-series summary statistics of a window (rows = time steps). Degenerate
// windows (constant, zero variance) fall back to 0 for the ratio-based
// features instead of NaN.
struct FeatureMatrix {
    Matrix values; // kFeatureCount x d
    std::vector<std::string> feature_names;
};

FeatureMatrix feature_matrix(const Matrix& window);

// Individual features over one series, exposed for tests.
double trend_strength(const Vector& x);
double seasonal_strength(const Vector& x);
Index dominant_period(const Vector& x); // 0 when none
double spikiness(const Vector& x);
double first_acf(const Vector& x);
// Coefficients of the orthonormal degree-1/degree-2 polynomial basis.
std::pair<double, double> poly_coefficients(const Vector& x);

} // namespace mtsdiag
