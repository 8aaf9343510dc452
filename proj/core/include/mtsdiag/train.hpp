#pragma once

#include <filesystem>
#include <vector>

#include "mtsdiag/model.hpp"

namespace mtsdiag {

struct TrainingLogEntry {
    Index epoch = 0;      // 1-based
    double train_loss = 0; // mean total loss over training windows, pre-step
    double val_loss = 0;   // mean total loss over validation windows, post-step
    double recon_term = 0; // mean Frobenius term over training windows
    double div_term = 0;   // mean ||D_div||_1 over training windows
};

struct TrainingLog {
    std::vector<TrainingLogEntry> entries;
    Index best_epoch = -1;
    double best_val_loss = 0;

    void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
    ModelParams params; // snapshot from the best validation epoch
    TrainingLog log;
};

// Full-batch adaptive-moment optimization of the mean window loss with early
// stopping on a held-out validation fraction of the windows. Single-threaded
// and deterministic per config seed.
TrainResult train(const std::vector<Matrix>& windows, const ModelConfig& config);

} // namespace mtsdiag
