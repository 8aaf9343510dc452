#pragma once

#include <array>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

// Top-2 principal directions of d points living in k-dimensional feature
// space (columns are the samples). Components are eigenvalue-ordered, sign
// fixed so each component's largest-magnitude loading is positive;
// rank-deficient components are zeroed and flagged.
struct PcaBasis {
    Matrix components; // k x 2
    Vector center;     // k (mean point)
    Vector explained;  // 2 eigenvalues, descending
    std::array<bool, 2> degenerate{false, false};
};

PcaBasis pca_fit(const Matrix& points);

// 2 x d coordinates of `points` in the basis.
Matrix pca_apply(const PcaBasis& basis, const Matrix& points);

inline Matrix pca_project(const Matrix& points) { return pca_apply(pca_fit(points), points); }

} // namespace mtsdiag
