#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtsdiag/series.hpp"

namespace mtsdiag {

// Encoder + reconstruction-head configuration. Paper-scale values
// (d_model=512, H=8, L=3, T=100) stay available; the defaults here are the
// desk-scale setup used by the bundled experiments.
struct ModelConfig {
    Index d = 10;        // input dimension
    Index d_model = 64;  // embedding width
    Index H = 4;         // attention heads
    Index L = 2;         // encoder layers
    Index T = 50;        // window length
    double lambda = 3.0; // trade-off between reconstruction and divergence
    double learning_rate = 1e-3;
    Index max_epochs = 100;
    Index patience = 10;
    std::uint64_t seed = 0;
    Index mlp_hidden = -1;      // reconstruction head hidden width; -1 => 2*d_model
    Index ff_hidden = -1;       // encoder feed-forward width; -1 => 4*d_model
    double val_fraction = 0.2;

    Index head_dim() const { return d_model / H; }
    Index resolved_mlp_hidden() const { return mlp_hidden > 0 ? mlp_hidden : 2 * d_model; }
    Index resolved_ff_hidden() const { return ff_hidden > 0 ? ff_hidden : 4 * d_model; }
    void validate() const;
};

struct LayerParams {
    std::vector<Matrix> Wq, Wk, Wv; // H matrices, d_model x head_dim
    Matrix Wo;                      // d_model x d_model
    Matrix W1;                      // d_model x ff_hidden
    Vector b1;
    Matrix W2;                      // ff_hidden x d_model
    Vector b2;
    Vector ln1_gamma, ln1_beta;
    Vector ln2_gamma, ln2_beta;
};

struct ModelParams {
    ModelConfig config;
    Matrix embed_W; // d x d_model
    Vector embed_b;
    Matrix pos_enc; // T x d_model, deterministic sinusoidal (not learnable)
    std::vector<LayerParams> layers;
    // Raw (pre-softplus) prior-attention scales, L x T. Row 0 is the learnable
    // layer-1 parameter; deeper layers refit their scales from the previous
    // layer's attention at every forward pass, so their rows receive no
    // gradient and are kept only so every layer's scale has a slot.
    Matrix laplace_raw;
    Matrix head_W1; // d_model x mlp_hidden
    Vector head_b1;
    Matrix head_W2; // mlp_hidden x d
    Vector head_b2;
};

// Flat view over one learnable tensor, used by the optimizer and the
// finite-difference checks.
struct TensorRef {
    std::string name;
    double* data;
    Index size;
};
struct ConstTensorRef {
    std::string name;
    const double* data;
    Index size;
};
std::vector<TensorRef> learnable_tensors(ModelParams& p);
std::vector<ConstTensorRef> learnable_tensors(const ModelParams& p);

ModelParams init_model(const ModelConfig& config);
// Same shapes as `like`, every learnable tensor zeroed.
ModelParams zeros_like(const ModelParams& like);

Matrix sinusoidal_positional_encoding(Index T, Index d_model);

// Row t is proportional to exp(-|t-k|/scales[t]) over k = 0..t (the causal
// support of the masked attention), normalized to sum 1.
Matrix laplace_prior(const Vector& scales, Index T);

struct EncodeOutput {
    Matrix x_hat;                          // T x d
    std::vector<std::vector<Matrix>> attn; // [L][H], each T x T, zero above diagonal
    std::vector<Matrix> prior;             // [L], each T x T, zero above diagonal
    Vector d_div;                          // length T
    Vector recon_error;                    // E_t = ||x_t - x_hat_t||^2
};

// Everything the backward pass needs, kept per layer.
struct LayerCache {
    Matrix input;
    std::vector<Matrix> Q, K, V;
    std::vector<Matrix> S;
    Matrix attn_mean; // heads averaged
    Matrix concat;
    Matrix attn_out;
    Matrix ln1_xhat;
    Vector ln1_inv_std;
    Matrix z;
    Matrix ff_pre, ff_act;
    Matrix ln2_xhat;
    Vector ln2_inv_std;
    Matrix out;
    Vector sigma;
    Matrix prior;
};

struct ForwardCache {
    Matrix x_in; // window after optional masking
    Matrix x0;
    std::vector<LayerCache> layers;
    Matrix head_pre, head_act;
    EncodeOutput out;
};

// Full encoder pass. If mask_series is set, that column of the (already
// normalized) window is zeroed before embedding; the reconstruction error is
// measured against the masked input, i.e. the window the model actually saw.
ForwardCache encode_full(const Matrix& x_window, const ModelParams& params,
                         std::optional<Index> mask_series = std::nullopt);

EncodeOutput encode_window(const Matrix& x_window, const ModelParams& params,
                           std::optional<Index> mask_series = std::nullopt);

struct Reconstruction {
    Matrix x_hat;
    Vector recon_error;
};
Reconstruction reconstruct(const Matrix& x_window, const ModelParams& params,
                           std::optional<Index> mask_series = std::nullopt);

// D_div[t] = (1/L) sum_l [ KL(P_t||S_t) + KL(S_t||P_t) ], head rows averaged
// before the KL, entries clipped below at 0 against rounding.
Vector assoc_discrepancy(const std::vector<std::vector<Matrix>>& attn,
                         const std::vector<Matrix>& prior);

// ||x - x_hat||_F^2 - lambda * ||d_div||_1
double total_loss(const Matrix& x, const Matrix& x_hat, const Vector& d_div, double lambda);

struct WindowLoss {
    double total = 0;
    double recon = 0;
    double div = 0; // ||d_div||_1
};

WindowLoss window_loss(const Matrix& x_window, const ModelParams& params);

// Forward + hand-derived backward for one window; gradients are accumulated
// into `grads` (shapes from zeros_like). Scales for layers past the first are
// treated as constants, matching the forward refit.
WindowLoss loss_and_gradients(const Matrix& x_window, const ModelParams& params,
                              ModelParams& grads);

namespace detail {
constexpr double kLayerNormEps = 1e-5;
constexpr double kSigmaFloor = 1e-3; // floor for scales refit from attention
constexpr double kKlFloor = 1e-12;   // distribution floor before the log
} // namespace detail

} // namespace mtsdiag
