#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mtsdiag/config.hpp"

namespace mtsdiag {

namespace stage {
inline constexpr const char* kGenerate = "generate";
inline constexpr const char* kTrain = "train";
inline constexpr const char* kDetect = "detect";
inline constexpr const char* kLocalize = "localize";
inline constexpr const char* kEvaluate = "evaluate";
inline constexpr const char* kSweep = "sweep";
} // namespace stage

// Runs the requested stages in canonical order. Each stage writes its
// artifacts plus a manifest entry; a stage whose manifest entry matches the
// current config hash and whose artifacts are intact is skipped unless
// `force` is set. Missing upstream artifacts raise MissingArtifactError
// naming the stage to run first.
void run_pipeline(const RunConfig& config, const std::vector<std::string>& stages,
                  bool force = false);

// Exit-code wrapper: 0 success, 2 config error, 3 missing artifact,
// 4 numerical failure, 1 anything else. Messages go to stderr.
int run_pipeline_cli(const RunConfig& config, const std::vector<std::string>& stages,
                     bool force = false) noexcept;

// Recomputes the hash of every artifact listed in the manifest; returns one
// message per mismatch or missing file (empty = intact).
std::vector<std::string> validate_manifest(const std::filesystem::path& out_dir);

std::string file_hash_hex(const std::filesystem::path& path);

// Anomaly-spread demonstration: two near-uncorrelated series, an anomaly in
// the first only; reports how the second series' reconstruction degrades
// inside the anomalous interval.
struct DemoSpreadResult {
    double spearman = 0;
    double kendall = 0;
    double inside_error = 0;  // mean squared error of series 2 inside the interval
    double outside_error = 0; // ... and outside it
    double ratio = 0;         // inside / outside
};

DemoSpreadResult run_demo_spread(const std::filesystem::path& out_dir, std::uint64_t seed);

} // namespace mtsdiag
