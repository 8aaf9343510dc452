#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

enum class AnomalyKind { AdditiveSine, ConstantOutlier, AdditiveOffset };

std::string to_string(AnomalyKind kind);
AnomalyKind anomaly_kind_from_string(const std::string& s);

// One injected anomaly: a contiguous interval on one series. Time indices are
// relative to the matrix the spec is applied to (for WVS generation, the test
// split). Parameters left unset are resolved at generation time from the
// target series: frequency = 10x the group frequency, amplitude = the drawn
// series amplitude, value = 3x the drawn amplitude.
struct AnomalySpec {
    Index target_series = 0;
    Index t1 = 0;
    Index t2 = 0; // inclusive
    AnomalyKind kind = AnomalyKind::ConstantOutlier;
    std::optional<double> frequency; // additive_sine
    std::optional<double> amplitude; // additive_sine
    std::optional<double> value;     // constant_outlier
    std::optional<double> offset;    // additive_offset
};

// Waves synthetic dataset: d series X_t = B*sin(2*pi*w*t + phi) + eps_t with
// frequencies shared inside groups, B and phi drawn once per series.
struct WvsConfig {
    Index n_series = 10;
    std::vector<double> frequencies = {1e-5, 1e-4, 1e-3, 1e-2};
    std::vector<Index> group_sizes = {1, 3, 3, 3};
    double amplitude_lo = 2.0;
    double amplitude_hi = 3.0;
    double phase_lo = 0.0;
    double phase_hi = 1.5707963267948966; // pi/2
    double noise_std = 1.0;
    Index length = 20000;
    Index train_length = -1; // trailing part is the test split; -1 => length/2
    std::vector<AnomalySpec> anomaly_specs;
    std::uint64_t seed = 0;

    Index resolved_train_length() const { return train_length < 0 ? length / 2 : train_length; }
    void validate() const;
};

LabeledDataset generate_wvs(const WvsConfig& config);

struct InjectionResult {
    SeriesMatrix series;
    BinaryMatrix dim_labels;
};

// Applies specs to a copy of x. Additive kinds add A(t) (t = row index within
// x); constant_outlier replaces values. Two specs may not touch the same
// (series, time) cell.
InjectionResult inject_anomalies(const SeriesMatrix& x, const std::vector<AnomalySpec>& specs);

} // namespace mtsdiag
