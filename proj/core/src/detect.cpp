#include "mtsdiag/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtsdiag/errors.hpp"

namespace mtsdiag {

void DetectionConfig::validate() const {
    if (K < 0) throw ConfigError("detect: K must be >= 0");
    if (b < 0) throw ConfigError("detect: b must be >= 0");
    if (!(n > 0)) throw ConfigError("detect: n must be > 0");
    if (reset_per_window && window_length < 1)
        throw ConfigError("detect: reset_per_window needs window_length");
}

Vector anomaly_score(const Vector& recon_error, const Vector& d_div) {
    if (recon_error.size() != d_div.size())
        throw ConfigError("anomaly_score: length mismatch");
    const Index T = d_div.size();
    Vector weights(T);
    const double mx = (-d_div).maxCoeff();
    double sum = 0;
    for (Index t = 0; t < T; ++t) {
        weights(t) = std::exp(-d_div(t) - mx);
        sum += weights(t);
    }
    weights /= sum;
    return recon_error.cwiseProduct(weights);
}

Vector fir_cusum(const Vector& scores, const DetectionConfig& config) {
    config.validate();
    const Index T = scores.size();
    Vector cs(T);
    double prev = config.b;
    for (Index t = 0; t < T; ++t) {
        if (config.reset_per_window && t > 0 && t % config.window_length == 0) prev = config.b;
        prev = std::max(0.0, scores(t) - (config.mu + config.K) + prev);
        cs(t) = prev;
    }
    return cs;
}

double default_allowance(const Vector& train_scores) {
    if (train_scores.size() == 0) throw ConfigError("default_allowance: empty scores");
    const double mean = train_scores.mean();
    const double var =
        (train_scores.array() - mean).square().sum() / static_cast<double>(train_scores.size());
    return mean + std::sqrt(var);
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw ConfigError("percentile: empty input");
    if (pct < 0 || pct > 100) throw ConfigError("percentile: pct must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Calibration calibrate_sigma(const Vector& train_scores, const DetectionConfig& config) {
    if (train_scores.size() == 0) throw ConfigError("calibrate_sigma: empty training scores");
    const Vector cs = fir_cusum(train_scores, config);
    const double mean = cs.mean();
    Calibration cal;
    cal.sigma = std::sqrt((cs.array() - mean).square().sum() / static_cast<double>(cs.size()));
    std::vector<double> values(cs.data(), cs.data() + cs.size());
    cal.fallback_threshold =
        percentile(std::move(values), 99.9) + std::numeric_limits<double>::epsilon();
    return cal;
}

DetectionResult detect(const Vector& test_scores, const Calibration& calibration,
                       const DetectionConfig& config) {
    if (calibration.sigma < 0) throw ConfigError("detect: sigma must be >= 0");
    DetectionResult result;
    result.scores = test_scores;
    result.cusum = fir_cusum(test_scores, config);
    result.threshold =
        calibration.sigma > 0 ? config.n * calibration.sigma : calibration.fallback_threshold;
    const Index T = test_scores.size();
    result.flags = BinaryVector::Zero(T);
    for (Index t = 0; t < T; ++t) result.flags(t) = result.cusum(t) > result.threshold ? 1 : 0;
    result.segments = segments_from_labels(result.flags, BinaryMatrix());
    return result;
}

} // namespace mtsdiag
