#include "mtsdiag/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "mtsdiag/errors.hpp"
#include "mtsdiag/rng.hpp"

namespace mtsdiag {

namespace {

// Adaptive moment estimation over the flattened learnable tensors.
class AdamOptimizer {
public:
    AdamOptimizer(ModelParams& params, double lr)
        : params_(learnable_tensors(params)),
          m_(total_size(params_), 0.0),
          v_(total_size(params_), 0.0),
          lr_(lr) {}

    void step(const ModelParams& grads) {
        ++t_;
        const auto grad_refs = learnable_tensors(grads);
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        std::size_t offset = 0;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            double* p = params_[i].data;
            const double* g = grad_refs[i].data;
            for (Index j = 0; j < params_[i].size; ++j) {
                double& m = m_[offset + static_cast<std::size_t>(j)];
                double& v = v_[offset + static_cast<std::size_t>(j)];
                m = kBeta1 * m + (1.0 - kBeta1) * g[j];
                v = kBeta2 * v + (1.0 - kBeta2) * g[j] * g[j];
                const double m_hat = m / bc1;
                const double v_hat = v / bc2;
                p[j] -= lr_ * m_hat / (std::sqrt(v_hat) + kEps);
            }
            offset += static_cast<std::size_t>(params_[i].size);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    static std::size_t total_size(const std::vector<TensorRef>& refs) {
        std::size_t n = 0;
        for (const auto& r : refs) n += static_cast<std::size_t>(r.size);
        return n;
    }

    std::vector<TensorRef> params_;
    std::vector<double> m_;
    std::vector<double> v_;
    double lr_;
    std::size_t t_ = 0;
};

void scale_grads(ModelParams& grads, double factor) {
    for (TensorRef ref : learnable_tensors(grads))
        for (Index i = 0; i < ref.size; ++i) ref.data[i] *= factor;
}

void zero_grads(ModelParams& grads) { scale_grads(grads, 0.0); }

} // namespace

void TrainingLog::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write training log: " + path.string());
    out << "epoch,train_loss,val_loss,recon_term,div_term\n";
    out.precision(17);
    for (const auto& e : entries)
        out << e.epoch << "," << e.train_loss << "," << e.val_loss << "," << e.recon_term << ","
            << e.div_term << "\n";
}

TrainResult train(const std::vector<Matrix>& windows, const ModelConfig& config) {
    config.validate();
    if (windows.empty()) throw ConfigError("train: need at least one window");
    for (const Matrix& w : windows)
        if (w.rows() != config.T || w.cols() != config.d)
            throw ConfigError("train: window shape does not match config");

    // Seeded shuffle, then the tail becomes validation. With a single window
    // it doubles as its own validation set.
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = substream(config.seed, "shuffle");
    shuffle_rng.shuffle(order);

    std::vector<const Matrix*> train_set, val_set;
    if (windows.size() == 1) {
        train_set.push_back(&windows[0]);
        val_set.push_back(&windows[0]);
    } else {
        auto n_val = static_cast<std::size_t>(
            std::lround(config.val_fraction * static_cast<double>(windows.size())));
        n_val = std::max<std::size_t>(1, std::min(n_val, windows.size() - 1));
        for (std::size_t i = 0; i < windows.size() - n_val; ++i)
            train_set.push_back(&windows[order[i]]);
        for (std::size_t i = windows.size() - n_val; i < windows.size(); ++i)
            val_set.push_back(&windows[order[i]]);
    }

    ModelParams params = init_model(config);
    ModelParams grads = zeros_like(params);
    AdamOptimizer optimizer(params, config.learning_rate);

    TrainResult result;
    result.params = params;
    result.log.best_val_loss = std::numeric_limits<double>::infinity();
    Index epochs_since_best = 0;

    for (Index epoch = 1; epoch <= config.max_epochs; ++epoch) {
        zero_grads(grads);
        WindowLoss train_loss;
        for (const Matrix* w : train_set) {
            const WindowLoss wl = loss_and_gradients(*w, params, grads);
            train_loss.total += wl.total;
            train_loss.recon += wl.recon;
            train_loss.div += wl.div;
        }
        const double inv_n = 1.0 / static_cast<double>(train_set.size());
        train_loss.total *= inv_n;
        train_loss.recon *= inv_n;
        train_loss.div *= inv_n;
        if (!std::isfinite(train_loss.total)) {
            std::ostringstream msg;
            msg << "train: non-finite loss at epoch " << epoch;
            throw NumericError(msg.str());
        }
        scale_grads(grads, inv_n);
        optimizer.step(grads);

        double val_loss = 0;
        for (const Matrix* w : val_set) val_loss += window_loss(*w, params).total;
        val_loss /= static_cast<double>(val_set.size());
        if (!std::isfinite(val_loss)) {
            std::ostringstream msg;
            msg << "train: non-finite validation loss at epoch " << epoch;
            throw NumericError(msg.str());
        }

        result.log.entries.push_back(
            {epoch, train_loss.total, val_loss, train_loss.recon, train_loss.div});

        if (val_loss < result.log.best_val_loss) {
            result.log.best_val_loss = val_loss;
            result.log.best_epoch = epoch;
            result.params = params;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= config.patience) break;
        }
    }
    return result;
}

} // namespace mtsdiag
