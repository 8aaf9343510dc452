#pragma once

#include <stdexcept>
#include <string>

namespace mtsdiag {

// Invalid or inconsistent user-supplied configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files (CSV, labels, checkpoints).
class IngestError : public std::runtime_error {
public:
    explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

// A pipeline stage was asked to run before its inputs exist. CLI exit code 3.
class MissingArtifactError : public std::runtime_error {
public:
    explicit MissingArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, diverging optimization, invalid distributions. CLI exit code 4.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace mtsdiag
