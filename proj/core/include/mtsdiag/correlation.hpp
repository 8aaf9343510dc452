#pragma once

#include <vector>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

enum class CorrelationMethod { Spearman, Kendall };

std::string to_string(CorrelationMethod m);
CorrelationMethod correlation_method_from_string(const std::string& s);

struct CorrelationWeights {
    Matrix matrix; // d x d, symmetric, unit diagonal, entries in [-1, 1]
    CorrelationMethod method = CorrelationMethod::Spearman;
    std::vector<Index> degenerate; // constant series; their off-diagonals are 0
};

// Spearman: Pearson on average ranks. Kendall: tau-b (tie-corrected),
// O(n log n) via merge-sort inversion counting.
CorrelationWeights correlation_weights(const SeriesMatrix& train, CorrelationMethod method);

// Average ranks (ties share the mean of their rank positions), 1-based.
std::vector<double> average_ranks(const std::vector<double>& v);

double spearman(const std::vector<double>& a, const std::vector<double>& b);
double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b);

} // namespace mtsdiag
