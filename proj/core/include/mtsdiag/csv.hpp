#pragma once

#include <filesystem>
#include <string>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

// Comma-separated numeric table, one row per time step, '.' decimal
// separator, optional first row of series names.
SeriesMatrix load_series_csv(const std::filesystem::path& path, bool has_header);

void write_series_csv(const std::filesystem::path& path, const SeriesMatrix& x);

// Cells in {0,1}, same shape as the data matrix.
BinaryMatrix load_dim_labels_csv(const std::filesystem::path& path, Index expected_cols);
// Single column of {0,1}.
BinaryVector load_point_labels_csv(const std::filesystem::path& path);

void write_binary_matrix_csv(const std::filesystem::path& path, const BinaryMatrix& m);
void write_binary_vector_csv(const std::filesystem::path& path, const BinaryVector& v);

} // namespace mtsdiag
