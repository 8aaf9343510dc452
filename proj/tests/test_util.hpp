#pragma once

#include <filesystem>
#include <string>

#include "mtsdiag/rng.hpp"
#include "mtsdiag/series.hpp"

namespace testutil {

inline mtsdiag::Matrix random_matrix(mtsdiag::Index rows, mtsdiag::Index cols, mtsdiag::Rng& rng,
                                     double lo = -1.0, double hi = 1.0) {
    mtsdiag::Matrix m(rows, cols);
    for (mtsdiag::Index r = 0; r < rows; ++r)
        for (mtsdiag::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
    return m;
}

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("mtsdiag_test_" + tag + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testutil
