#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "mtsdiag/correlation.hpp"
#include "mtsdiag/detect.hpp"
#include "mtsdiag/model.hpp"
#include "mtsdiag/wvs.hpp"

namespace mtsdiag {

// Flat sectioned key=value text. '#' starts a comment, lists are
// comma-separated, keys before any [section] header land in section "".
using KeyValueSections = std::map<std::string, std::map<std::string, std::string>>;

KeyValueSections parse_key_value_file(const std::filesystem::path& path);
KeyValueSections parse_key_value_text(const std::string& text);

// WvsConfig <-> flat key=value (no section headers).
WvsConfig wvs_config_from_keys(const std::map<std::string, std::string>& keys);
std::string serialize_wvs_config(const WvsConfig& config);

struct DataSection {
    std::string source = "wvs"; // wvs | csv
    WvsConfig wvs;
    std::optional<std::filesystem::path> wvs_file; // external flat WvsConfig
    std::filesystem::path train_csv;
    std::filesystem::path test_csv;
    bool has_header = true;
    std::optional<std::filesystem::path> dim_labels_csv;
    std::optional<std::filesystem::path> point_labels_csv;
};

struct DetectSection {
    double K = -1; // < 0 => mean + std of training scores
    double b = 0;
    double n = 3;
    double mu = 0;
    bool reset_per_window = false;
};

struct LocalizeSection {
    CorrelationMethod method = CorrelationMethod::Spearman;
    std::string h1_mode = "evaluation"; // evaluation | fixed
    double h1_percentile = 90;          // fixed mode
    double h2_percentile = 97;
    bool h2_per_series = false;
    Index w1 = 0;
    Index w2 = 5;
    Index sfas_window = 16; // per-step feature window for time-step SFAS
    Index sweep_w2 = 0;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    DataSection data;
    ModelConfig model; // d is resolved from the data at train time
    DetectSection detect;
    LocalizeSection localize;
};

// Collects every problem before throwing ConfigError.
RunConfig parse_run_config(const std::filesystem::path& path);
// Relative paths inside the config are resolved against the working directory.
RunConfig run_config_from_sections(const KeyValueSections& sections);

// Canonical text form; parse(serialize(c)) == c.
std::string serialize_run_config(const RunConfig& config);

// Canonical text of one section ("data", "model", "detect", "localize"),
// used for per-stage staleness hashes.
std::string serialize_section(const RunConfig& config, const std::string& section);

std::uint64_t config_hash(const RunConfig& config);

} // namespace mtsdiag
