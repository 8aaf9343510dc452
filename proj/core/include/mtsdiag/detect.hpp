#pragma once

#include <vector>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

struct DetectionConfig {
    double K = 0;            // CUSUM slack (allowance)
    double b = 0;            // FIR head start CS_0
    double n = 3;            // threshold multiplier, dataset-specific
    double mu = 0;           // expected score under normal conditions
    bool reset_per_window = false; // ablation flag; default is one stream
    Index window_length = 0;       // needed when reset_per_window is set

    void validate() const;
};

// AS_t = E_t * softmax(-D_div)_t; softmax over the window's T steps.
Vector anomaly_score(const Vector& recon_error, const Vector& d_div);

// CS_0 = b; CS_t = max(0, AS_t - (mu + K) + CS_{t-1}), one pass in stream
// order (optionally reset at window boundaries).
Vector fir_cusum(const Vector& scores, const DetectionConfig& config);

// mean(AS) + one standard deviation of AS over the training stream; the
// default slack when the config leaves K unset.
double default_allowance(const Vector& train_scores);

struct Calibration {
    double sigma = 0;          // population std of training CS
    double fallback_threshold = 0; // 99.9th percentile of training CS + eps
};

Calibration calibrate_sigma(const Vector& train_scores, const DetectionConfig& config);

struct DetectionResult {
    Vector scores;   // AS
    Vector cusum;    // CS
    double threshold = 0;
    BinaryVector flags;
    std::vector<Segment> segments; // dims left empty
};

DetectionResult detect(const Vector& test_scores, const Calibration& calibration,
                       const DetectionConfig& config);

// Linear interpolation between order statistics; pct in [0, 100].
double percentile(std::vector<double> values, double pct);

} // namespace mtsdiag
