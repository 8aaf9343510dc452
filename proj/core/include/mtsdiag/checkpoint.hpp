#pragma once

#include <filesystem>

#include "mtsdiag/model.hpp"

namespace mtsdiag {

// Self-describing JSON container: format version, config, and every
// parameter tensor under its name. Doubles round-trip exactly.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

} // namespace mtsdiag
