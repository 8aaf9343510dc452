#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mtsdiag/errors.hpp"

namespace mtsdiag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BinaryMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
using BinaryVector = Eigen::Matrix<int, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

// A multivariate time series: one row per time step, one column per series.
struct SeriesMatrix {
    Matrix values;                  // T_total x d
    std::vector<std::string> names; // exactly d unique entries

    Index steps() const { return values.rows(); }
    Index dims() const { return values.cols(); }

    void validate() const {
        if (values.rows() < 1 || values.cols() < 1)
            throw ConfigError("SeriesMatrix: need at least 1 time step and 1 series");
        if (static_cast<Index>(names.size()) != values.cols())
            throw ConfigError("SeriesMatrix: name count does not match column count");
        std::set<std::string> unique(names.begin(), names.end());
        if (static_cast<Index>(unique.size()) != values.cols())
            throw ConfigError("SeriesMatrix: series names must be unique");
        if (!values.allFinite())
            throw IngestError("SeriesMatrix: non-finite entries");
    }
};

inline std::vector<std::string> default_names(Index d) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i) names.push_back("s" + std::to_string(i));
    return names;
}

// A maximal run [start, end] of consecutive anomalous time steps, with the
// set of series that are anomalous anywhere inside it.
struct Segment {
    Index start = 0;
    Index end = 0; // inclusive
    std::vector<Index> dims;

    Index length() const { return end - start + 1; }
};

// Extracts maximal runs of flagged steps; `dim_labels` may be empty, in which
// case segment dim sets are left empty.
std::vector<Segment> segments_from_labels(const BinaryVector& point_labels,
                                          const BinaryMatrix& dim_labels);

struct LabeledDataset {
    SeriesMatrix train;
    SeriesMatrix test;
    BinaryVector point_labels; // length T_test
    BinaryMatrix dim_labels;   // T_test x d
    std::vector<Segment> segments;

    void validate() const;
};

} // namespace mtsdiag
