#include "mtsdiag/features.hpp"

#include <cmath>

#include "mtsdiag/errors.hpp"

namespace mtsdiag {

namespace {

double population_variance(const Vector& x) {
    const double mean = x.mean();
    return (x.array() - mean).square().sum() / static_cast<double>(x.size());
}

// Residual variance after least-squares linear detrend.
double detrended_variance(const Vector& x) {
    const Index n = x.size();
    const double t_mean = static_cast<double>(n - 1) / 2.0;
    const double x_mean = x.mean();
    double stx = 0, stt = 0;
    for (Index t = 0; t < n; ++t) {
        const double dt = static_cast<double>(t) - t_mean;
        stx += dt * (x(t) - x_mean);
        stt += dt * dt;
    }
    const double slope = stt > 0 ? stx / stt : 0.0;
    double ss = 0;
    for (Index t = 0; t < n; ++t) {
        const double fit = x_mean + slope * (static_cast<double>(t) - t_mean);
        ss += (x(t) - fit) * (x(t) - fit);
    }
    return ss / static_cast<double>(n);
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

} // namespace

double trend_strength(const Vector& x) {
    const double var = population_variance(x);
    if (var <= 0) return 0;
    return clamp01(1.0 - detrended_variance(x) / var);
}

std::pair<double, double> poly_coefficients(const Vector& x) {
    const Index n = x.size();
    // Orthonormal discrete basis: p1 from centered t, p2 from t^2
    // Gram-Schmidt'ed against {1, p1}.
    Vector u(n), u2(n);
    const double t_mean = static_cast<double>(n - 1) / 2.0;
    for (Index t = 0; t < n; ++t) {
        u(t) = static_cast<double>(t) - t_mean;
        u2(t) = u(t) * u(t);
    }
    const Vector p1 = u / u.norm();
    Vector q = u2.array() - u2.mean();
    q -= p1 * p1.dot(u2);
    const double qn = q.norm();
    const Vector p2 = qn > 0 ? Vector(q / qn) : Vector(Vector::Zero(n));
    return {p1.dot(x), p2.dot(x)};
}

Index dominant_period(const Vector& x) {
    const Index n = x.size();
    const Vector centered = x.array() - x.mean();
    double best_mag = 0;
    Index best_k = 0;
    // Naive DFT over the meaningful bins; feature windows are short.
    for (Index k = 1; k <= n / 2; ++k) {
        double re = 0, im = 0;
        for (Index t = 0; t < n; ++t) {
            const double angle =
                -2.0 * 3.14159265358979323846 * static_cast<double>(k * t) / static_cast<double>(n);
            re += centered(t) * std::cos(angle);
            im += centered(t) * std::sin(angle);
        }
        const double mag = re * re + im * im;
        if (mag > best_mag) {
            best_mag = mag;
            best_k = k;
        }
    }
    if (best_k == 0 || best_mag <= 0) return 0;
    const auto period = static_cast<Index>(std::lround(static_cast<double>(n) / static_cast<double>(best_k)));
    return period >= 2 && period <= n ? period : 0;
}

double seasonal_strength(const Vector& x) {
    const double var = population_variance(x);
    if (var <= 0) return 0;
    const Index period = dominant_period(x);
    if (period < 2) return 0;
    const Index n = x.size();

    // Deseasonalize by subtracting per-phase means for the dominant period.
    std::vector<double> phase_sum(static_cast<std::size_t>(period), 0.0);
    std::vector<Index> phase_count(static_cast<std::size_t>(period), 0);
    for (Index t = 0; t < n; ++t) {
        phase_sum[static_cast<std::size_t>(t % period)] += x(t);
        ++phase_count[static_cast<std::size_t>(t % period)];
    }
    Vector resid(n);
    for (Index t = 0; t < n; ++t) {
        const auto ph = static_cast<std::size_t>(t % period);
        resid(t) = x(t) - phase_sum[ph] / static_cast<double>(phase_count[ph]);
    }
    return clamp01(1.0 - population_variance(resid) / var);
}

double spikiness(const Vector& x) {
    const Index n = x.size();
    const double s1 = x.sum();
    const double s2 = x.array().square().sum();
    Vector loo(n);
    const double m = static_cast<double>(n - 1);
    for (Index i = 0; i < n; ++i) {
        const double mean = (s1 - x(i)) / m;
        loo(i) = (s2 - x(i) * x(i)) / m - mean * mean;
    }
    return population_variance(loo);
}

double first_acf(const Vector& x) {
    const Index n = x.size();
    const double mean = x.mean();
    double denom = 0, numer = 0;
    for (Index t = 0; t < n; ++t) denom += (x(t) - mean) * (x(t) - mean);
    if (denom <= 0) return 0;
    for (Index t = 1; t < n; ++t) numer += (x(t) - mean) * (x(t - 1) - mean);
    return numer / denom;
}

FeatureMatrix feature_matrix(const Matrix& window) {
    if (window.rows() < 4) throw ConfigError("feature_matrix: window must have at least 4 steps");
    const Index d = window.cols();

    FeatureMatrix out;
    out.feature_names = {"variance",          "trend_strength", "linearity", "curvature",
                         "seasonal_strength", "mean",           "spikiness", "first_acf"};
    out.values = Matrix(kFeatureCount, d);
    for (Index i = 0; i < d; ++i) {
        const Vector x = window.col(i);
        const auto [linearity, curvature] = poly_coefficients(x);
        out.values(0, i) = population_variance(x);
        out.values(1, i) = trend_strength(x);
        out.values(2, i) = linearity;
        out.values(3, i) = curvature;
        out.values(4, i) = seasonal_strength(x);
        out.values(5, i) = x.mean();
        out.values(6, i) = spikiness(x);
        out.values(7, i) = first_acf(x);
    }
    return out;
}

} // namespace mtsdiag
