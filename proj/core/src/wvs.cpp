#include "mtsdiag/wvs.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "mtsdiag/rng.hpp"

namespace mtsdiag {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

std::string to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::AdditiveSine: return "additive_sine";
        case AnomalyKind::ConstantOutlier: return "constant_outlier";
        case AnomalyKind::AdditiveOffset: return "additive_offset";
    }
    return "?";
}

AnomalyKind anomaly_kind_from_string(const std::string& s) {
    if (s == "additive_sine") return AnomalyKind::AdditiveSine;
    if (s == "constant_outlier") return AnomalyKind::ConstantOutlier;
    if (s == "additive_offset") return AnomalyKind::AdditiveOffset;
    throw ConfigError("unknown anomaly kind: " + s);
}

void WvsConfig::validate() const {
    std::vector<std::string> problems;
    if (n_series < 1) problems.push_back("n_series must be >= 1");
    if (frequencies.size() != group_sizes.size())
        problems.push_back("frequencies and group_sizes must have the same length");
    const Index total = std::accumulate(group_sizes.begin(), group_sizes.end(), Index{0});
    if (total != n_series)
        problems.push_back("group_sizes must sum to n_series (" + std::to_string(total) +
                           " != " + std::to_string(n_series) + ")");
    if (!(amplitude_lo <= amplitude_hi)) problems.push_back("amplitude range is empty");
    if (!(phase_lo <= phase_hi)) problems.push_back("phase range is empty");
    if (noise_std < 0) problems.push_back("noise_std must be >= 0");
    if (length < 1) problems.push_back("length must be >= 1");
    const Index train_len = resolved_train_length();
    if (train_len < 0 || train_len > length)
        problems.push_back("train_length must lie in [0, length]");
    const Index test_len = length - train_len;
    for (std::size_t i = 0; i < anomaly_specs.size(); ++i) {
        const AnomalySpec& spec = anomaly_specs[i];
        if (spec.target_series < 0 || spec.target_series >= n_series)
            problems.push_back("anomaly " + std::to_string(i) + ": target_series out of range");
        if (spec.t1 < 0 || spec.t1 > spec.t2 || spec.t2 >= test_len)
            problems.push_back("anomaly " + std::to_string(i) +
                               ": interval must satisfy 0 <= t1 <= t2 < test length");
    }
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid WVS config:";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw ConfigError(msg.str());
    }
}

InjectionResult inject_anomalies(const SeriesMatrix& x, const std::vector<AnomalySpec>& specs) {
    const Index T = x.steps();
    const Index d = x.dims();

    InjectionResult out;
    out.series = x;
    out.dim_labels = BinaryMatrix::Zero(T, d);

    BinaryMatrix touched = BinaryMatrix::Zero(T, d);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const AnomalySpec& spec = specs[i];
        if (spec.target_series < 0 || spec.target_series >= d)
            throw ConfigError("anomaly " + std::to_string(i) + ": target_series out of range");
        if (spec.t1 < 0 || spec.t1 > spec.t2 || spec.t2 >= T)
            throw ConfigError("anomaly " + std::to_string(i) + ": interval out of bounds");
        for (Index t = spec.t1; t <= spec.t2; ++t) {
            if (touched(t, spec.target_series))
                throw ConfigError("anomaly " + std::to_string(i) + ": overlaps another spec at (t=" +
                                  std::to_string(t) + ", series=" +
                                  std::to_string(spec.target_series) + ")");
            touched(t, spec.target_series) = 1;
        }

        const Index col = spec.target_series;
        switch (spec.kind) {
            case AnomalyKind::AdditiveSine: {
                if (!spec.frequency || !spec.amplitude)
                    throw ConfigError("anomaly " + std::to_string(i) +
                                      ": additive_sine needs frequency and amplitude");
                for (Index t = spec.t1; t <= spec.t2; ++t)
                    out.series.values(t, col) +=
                        *spec.amplitude * std::sin(kTwoPi * *spec.frequency * static_cast<double>(t));
                break;
            }
            case AnomalyKind::ConstantOutlier: {
                if (!spec.value)
                    throw ConfigError("anomaly " + std::to_string(i) +
                                      ": constant_outlier needs value");
                for (Index t = spec.t1; t <= spec.t2; ++t) out.series.values(t, col) = *spec.value;
                break;
            }
            case AnomalyKind::AdditiveOffset: {
                if (!spec.offset)
                    throw ConfigError("anomaly " + std::to_string(i) +
                                      ": additive_offset needs offset");
                for (Index t = spec.t1; t <= spec.t2; ++t) out.series.values(t, col) += *spec.offset;
                break;
            }
        }
        out.dim_labels.block(spec.t1, col, spec.t2 - spec.t1 + 1, 1).setOnes();
    }
    return out;
}

std::vector<Segment> segments_from_labels(const BinaryVector& point_labels,
                                          const BinaryMatrix& dim_labels) {
    std::vector<Segment> segments;
    const Index T = point_labels.size();
    Index t = 0;
    while (t < T) {
        if (point_labels(t) == 0) {
            ++t;
            continue;
        }
        Segment seg;
        seg.start = t;
        while (t < T && point_labels(t) == 1) ++t;
        seg.end = t - 1;
        if (dim_labels.size() > 0) {
            for (Index c = 0; c < dim_labels.cols(); ++c) {
                bool any = false;
                for (Index r = seg.start; r <= seg.end && !any; ++r) any = dim_labels(r, c) != 0;
                if (any) seg.dims.push_back(c);
            }
        }
        segments.push_back(std::move(seg));
    }
    return segments;
}

void LabeledDataset::validate() const {
    train.validate();
    test.validate();
    if (train.dims() != test.dims())
        throw ConfigError("LabeledDataset: train/test dimension mismatch");
    if (point_labels.size() != test.steps() || dim_labels.rows() != test.steps() ||
        dim_labels.cols() != test.dims())
        throw ConfigError("LabeledDataset: label shapes do not match test matrix");
    for (Index t = 0; t < point_labels.size(); ++t) {
        const bool any_dim = dim_labels.row(t).sum() > 0;
        if ((point_labels(t) != 0) != any_dim)
            throw ConfigError("LabeledDataset: point_labels must be the row-wise OR of dim_labels");
    }
}

LabeledDataset generate_wvs(const WvsConfig& config) {
    config.validate();

    const Index d = config.n_series;
    const Index T_total = config.length;
    const Index train_len = config.resolved_train_length();
    const Index test_len = T_total - train_len;

    // Which group each series belongs to.
    std::vector<std::size_t> group_of(static_cast<std::size_t>(d));
    {
        std::size_t g = 0;
        Index used = 0;
        for (Index i = 0; i < d; ++i) {
            while (used >= config.group_sizes[g]) {
                ++g;
                used = 0;
            }
            group_of[static_cast<std::size_t>(i)] = g;
            ++used;
        }
    }

    Matrix values(T_total, d);
    std::vector<double> amplitudes(static_cast<std::size_t>(d));
    std::vector<double> frequencies(static_cast<std::size_t>(d));

    // One independent stream per series keeps generation reproducible even if
    // series are produced in a different order.
    for (Index i = 0; i < d; ++i) {
        Rng rng = substream(config.seed, "data/wvs", static_cast<std::uint64_t>(i));
        const double omega = config.frequencies[group_of[static_cast<std::size_t>(i)]];
        const double B = rng.uniform(config.amplitude_lo, config.amplitude_hi);
        const double phi = rng.uniform(config.phase_lo, config.phase_hi);
        amplitudes[static_cast<std::size_t>(i)] = B;
        frequencies[static_cast<std::size_t>(i)] = omega;
        for (Index t = 0; t < T_total; ++t) {
            const double eps = config.noise_std > 0 ? rng.normal(0.0, config.noise_std) : 0.0;
            values(t, i) = B * std::sin(kTwoPi * omega * static_cast<double>(t) + phi) + eps;
        }
    }

    LabeledDataset out;
    out.train.values = values.topRows(train_len);
    out.train.names = default_names(d);
    out.test.values = values.bottomRows(test_len);
    out.test.names = default_names(d);

    // Fill in defaults the config left open, from the drawn per-series values.
    std::vector<AnomalySpec> specs = config.anomaly_specs;
    for (AnomalySpec& spec : specs) {
        const auto i = static_cast<std::size_t>(spec.target_series);
        if (spec.kind == AnomalyKind::AdditiveSine) {
            if (!spec.frequency) spec.frequency = 10.0 * frequencies[i];
            if (!spec.amplitude) spec.amplitude = amplitudes[i];
        } else if (spec.kind == AnomalyKind::ConstantOutlier) {
            if (!spec.value) spec.value = 3.0 * amplitudes[i];
        } else if (spec.kind == AnomalyKind::AdditiveOffset) {
            if (!spec.offset) spec.offset = 3.0 * amplitudes[i];
        }
    }

    InjectionResult injected = inject_anomalies(out.test, specs);
    out.test = std::move(injected.series);
    out.dim_labels = std::move(injected.dim_labels);
    out.point_labels = BinaryVector::Zero(test_len);
    for (Index t = 0; t < test_len; ++t)
        out.point_labels(t) = out.dim_labels.row(t).sum() > 0 ? 1 : 0;
    out.segments = segments_from_labels(out.point_labels, out.dim_labels);
    out.validate();
    return out;
}

} // namespace mtsdiag
