#include "mtsdiag/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtsdiag/errors.hpp"

namespace mtsdiag {

std::string to_string(CorrelationMethod m) {
    return m == CorrelationMethod::Spearman ? "spearman" : "kendall";
}

CorrelationMethod correlation_method_from_string(const std::string& s) {
    if (s == "spearman") return CorrelationMethod::Spearman;
    if (s == "kendall") return CorrelationMethod::Kendall;
    throw ConfigError("unknown correlation method: " + s);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double cov = 0, var_a = 0, var_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0 || var_b == 0) return 0;
    return cov / std::sqrt(var_a * var_b);
}

// Merge-sort exchange count (number of inversions).
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                               std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t count = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            count += mid - i;
            buf[k++] = v[j++];
        } else {
            buf[k++] = v[i++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return count;
}

std::uint64_t tied_pairs(const std::vector<double>& sorted_keys) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    while (i < sorted_keys.size()) {
        std::size_t j = i;
        while (j + 1 < sorted_keys.size() && sorted_keys[j + 1] == sorted_keys[i]) ++j;
        const std::uint64_t t = j - i + 1;
        total += t * (t - 1) / 2;
        i = j + 1;
    }
    return total;
}

} // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ConfigError("spearman: need two equal-length vectors of size >= 2");
    return pearson(average_ranks(a), average_ranks(b));
}

double kendall_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    if (b.size() != n || n < 2)
        throw ConfigError("kendall: need two equal-length vectors of size >= 2");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    // Tie counts in a, in b, and jointly (Knight's algorithm bookkeeping).
    std::vector<double> a_sorted(n), b_by_a(n);
    for (std::size_t i = 0; i < n; ++i) {
        a_sorted[i] = a[order[i]];
        b_by_a[i] = b[order[i]];
    }
    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t n1 = tied_pairs(a_sorted);

    std::uint64_t n3 = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && a_sorted[j + 1] == a_sorted[i] && b_by_a[j + 1] == b_by_a[i]) ++j;
            const std::uint64_t t = j - i + 1;
            n3 += t * (t - 1) / 2;
            i = j + 1;
        }
    }

    std::vector<double> b_sorted = b;
    std::sort(b_sorted.begin(), b_sorted.end());
    const std::uint64_t n2 = tied_pairs(b_sorted);

    std::vector<double> buf(n);
    const std::uint64_t swaps = count_inversions(b_by_a, buf, 0, n);

    const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                         std::sqrt(static_cast<double>(n0 - n2));
    if (denom == 0) return 0;
    const double numer = static_cast<double>(n0) - static_cast<double>(n1) -
                         static_cast<double>(n2) + static_cast<double>(n3) -
                         2.0 * static_cast<double>(swaps);
    return numer / denom;
}

CorrelationWeights correlation_weights(const SeriesMatrix& train, CorrelationMethod method) {
    if (train.steps() < 3) throw ConfigError("correlation_weights: need at least 3 time steps");
    const Index d = train.dims();

    CorrelationWeights out;
    out.method = method;
    out.matrix = Matrix::Identity(d, d);

    std::vector<std::vector<double>> cols(static_cast<std::size_t>(d));
    std::vector<bool> constant(static_cast<std::size_t>(d), false);
    for (Index c = 0; c < d; ++c) {
        auto& col = cols[static_cast<std::size_t>(c)];
        col.assign(train.values.col(c).data(), train.values.col(c).data() + train.steps());
        constant[static_cast<std::size_t>(c)] =
            std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; });
        if (constant[static_cast<std::size_t>(c)]) out.degenerate.push_back(c);
    }

    for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j) {
            double r = 0;
            if (!constant[static_cast<std::size_t>(i)] && !constant[static_cast<std::size_t>(j)]) {
                r = method == CorrelationMethod::Spearman
                        ? spearman(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)])
                        : kendall_tau_b(cols[static_cast<std::size_t>(i)],
                                        cols[static_cast<std::size_t>(j)]);
            }
            out.matrix(i, j) = r;
            out.matrix(j, i) = r;
        }
    }
    return out;
}

} // namespace mtsdiag
