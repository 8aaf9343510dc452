#include "mtsdiag/model.hpp"

#include <cmath>
#include <sstream>

#include "mtsdiag/errors.hpp"
#include "mtsdiag/rng.hpp"

namespace mtsdiag {

using detail::kKlFloor;
using detail::kLayerNormEps;
using detail::kSigmaFloor;

void ModelConfig::validate() const {
    std::vector<std::string> problems;
    if (d < 1) problems.push_back("d must be >= 1");
    if (d_model < 1) problems.push_back("d_model must be >= 1");
    if (H < 1) problems.push_back("H must be >= 1");
    if (d_model % std::max<Index>(H, 1) != 0) problems.push_back("d_model must be divisible by H");
    if (L < 1) problems.push_back("L must be >= 1");
    if (T < 2) problems.push_back("T must be >= 2");
    if (lambda < 0) problems.push_back("lambda must be >= 0");
    if (learning_rate <= 0) problems.push_back("learning_rate must be > 0");
    if (max_epochs < 1) problems.push_back("max_epochs must be >= 1");
    if (patience < 1) problems.push_back("patience must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        problems.push_back("val_fraction must lie in (0, 1)");
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid model config:";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw ConfigError(msg.str());
    }
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double softplus_inv(double y) { return std::log(std::expm1(y)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void glorot_uniform(Matrix& W, Index fan_in, Index fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Index r = 0; r < W.rows(); ++r)
        for (Index c = 0; c < W.cols(); ++c) W(r, c) = rng.uniform(-a, a);
}

// Symmetric KL between two rows over the causal support, with a floor +
// renormalization guard before the logs. `grad_p`/`grad_s` (optional)
// receive the partials of the unguarded expression.
double sym_kl_row(const Vector& p, const Vector& s, Index n, double* grad_p = nullptr,
                  double* grad_s = nullptr) {
    double sum_p = 0, sum_s = 0;
    for (Index k = 0; k < n; ++k) {
        sum_p += std::max(p(k), kKlFloor);
        sum_s += std::max(s(k), kKlFloor);
    }
    double kl = 0;
    for (Index k = 0; k < n; ++k) {
        const double pk = std::max(p(k), kKlFloor) / sum_p;
        const double sk = std::max(s(k), kKlFloor) / sum_s;
        const double log_ratio = std::log(pk / sk);
        kl += pk * log_ratio - sk * log_ratio; // pk*log(pk/sk) + sk*log(sk/pk)
        if (grad_p) grad_p[k] = log_ratio + 1.0 - sk / pk;
        if (grad_s) grad_s[k] = -log_ratio + 1.0 - pk / sk;
    }
    return kl;
}

void check_finite(const Matrix& m, Index layer, const char* what) {
    if (!m.allFinite()) {
        std::ostringstream msg;
        msg << "encode: non-finite " << what << " at layer " << layer;
        throw NumericError(msg.str());
    }
}

} // namespace

Matrix sinusoidal_positional_encoding(Index T, Index d_model) {
    Matrix pe(T, d_model);
    for (Index t = 0; t < T; ++t) {
        for (Index j = 0; j < d_model; ++j) {
            const double exponent = static_cast<double>(j - (j % 2)) / static_cast<double>(d_model);
            const double angle = static_cast<double>(t) / std::pow(10000.0, exponent);
            pe(t, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

ModelParams init_model(const ModelConfig& config) {
    config.validate();
    const Index dm = config.d_model;
    const Index dk = config.head_dim();
    const Index ff = config.resolved_ff_hidden();
    const Index mh = config.resolved_mlp_hidden();

    Rng rng = substream(config.seed, "init");

    ModelParams p;
    p.config = config;
    p.embed_W = Matrix(config.d, dm);
    glorot_uniform(p.embed_W, config.d, dm, rng);
    p.embed_b = Vector::Zero(dm);
    p.pos_enc = sinusoidal_positional_encoding(config.T, dm);

    p.layers.resize(static_cast<std::size_t>(config.L));
    for (auto& layer : p.layers) {
        layer.Wq.resize(static_cast<std::size_t>(config.H));
        layer.Wk.resize(static_cast<std::size_t>(config.H));
        layer.Wv.resize(static_cast<std::size_t>(config.H));
        for (Index h = 0; h < config.H; ++h) {
            auto& wq = layer.Wq[static_cast<std::size_t>(h)];
            auto& wk = layer.Wk[static_cast<std::size_t>(h)];
            auto& wv = layer.Wv[static_cast<std::size_t>(h)];
            wq = Matrix(dm, dk);
            wk = Matrix(dm, dk);
            wv = Matrix(dm, dk);
            glorot_uniform(wq, dm, dk, rng);
            glorot_uniform(wk, dm, dk, rng);
            glorot_uniform(wv, dm, dk, rng);
        }
        layer.Wo = Matrix(dm, dm);
        glorot_uniform(layer.Wo, dm, dm, rng);
        layer.W1 = Matrix(dm, ff);
        glorot_uniform(layer.W1, dm, ff, rng);
        layer.b1 = Vector::Zero(ff);
        layer.W2 = Matrix(ff, dm);
        glorot_uniform(layer.W2, ff, dm, rng);
        layer.b2 = Vector::Zero(dm);
        layer.ln1_gamma = Vector::Ones(dm);
        layer.ln1_beta = Vector::Zero(dm);
        layer.ln2_gamma = Vector::Ones(dm);
        layer.ln2_beta = Vector::Zero(dm);
    }

    // Effective prior width ~ T/10 at init.
    p.laplace_raw = Matrix::Constant(config.L, config.T,
                                     softplus_inv(static_cast<double>(config.T) / 10.0));

    p.head_W1 = Matrix(dm, mh);
    glorot_uniform(p.head_W1, dm, mh, rng);
    p.head_b1 = Vector::Zero(mh);
    p.head_W2 = Matrix(mh, config.d);
    glorot_uniform(p.head_W2, mh, config.d, rng);
    p.head_b2 = Vector::Zero(config.d);
    return p;
}

ModelParams zeros_like(const ModelParams& like) {
    ModelParams z = like;
    for (TensorRef ref : learnable_tensors(z))
        for (Index i = 0; i < ref.size; ++i) ref.data[i] = 0.0;
    return z;
}

namespace {

template <typename Params, typename Ref, typename Ptr>
std::vector<Ref> collect_tensors(Params& p) {
    std::vector<Ref> refs;
    auto add_mat = [&](const std::string& name, auto& m) {
        refs.push_back(Ref{name, const_cast<Ptr>(m.data()), m.size()});
    };
    add_mat("embed.W", p.embed_W);
    add_mat("embed.b", p.embed_b);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        const std::string prefix = "layer" + std::to_string(l) + ".";
        for (std::size_t h = 0; h < layer.Wq.size(); ++h) {
            add_mat(prefix + "Wq" + std::to_string(h), layer.Wq[h]);
            add_mat(prefix + "Wk" + std::to_string(h), layer.Wk[h]);
            add_mat(prefix + "Wv" + std::to_string(h), layer.Wv[h]);
        }
        add_mat(prefix + "Wo", layer.Wo);
        add_mat(prefix + "ff.W1", layer.W1);
        add_mat(prefix + "ff.b1", layer.b1);
        add_mat(prefix + "ff.W2", layer.W2);
        add_mat(prefix + "ff.b2", layer.b2);
        add_mat(prefix + "ln1.gamma", layer.ln1_gamma);
        add_mat(prefix + "ln1.beta", layer.ln1_beta);
        add_mat(prefix + "ln2.gamma", layer.ln2_gamma);
        add_mat(prefix + "ln2.beta", layer.ln2_beta);
    }
    add_mat("laplace_raw", p.laplace_raw);
    add_mat("head.W1", p.head_W1);
    add_mat("head.b1", p.head_b1);
    add_mat("head.W2", p.head_W2);
    add_mat("head.b2", p.head_b2);
    return refs;
}

} // namespace

std::vector<TensorRef> learnable_tensors(ModelParams& p) {
    return collect_tensors<ModelParams, TensorRef, double*>(p);
}
std::vector<ConstTensorRef> learnable_tensors(const ModelParams& p) {
    return collect_tensors<const ModelParams, ConstTensorRef, const double*>(p);
}

Matrix laplace_prior(const Vector& scales, Index T) {
    if (scales.size() != T) throw ConfigError("laplace_prior: need one scale per time step");
    for (Index t = 0; t < T; ++t)
        if (!(scales(t) > 0))
            throw NumericError("laplace_prior: nonpositive scale at t=" + std::to_string(t));
    Matrix P = Matrix::Zero(T, T);
    for (Index t = 0; t < T; ++t) {
        double sum = 0;
        for (Index k = 0; k <= t; ++k) {
            const double w = std::exp(-static_cast<double>(t - k) / scales(t));
            P(t, k) = w;
            sum += w;
        }
        P.row(t).head(t + 1) /= sum;
    }
    return P;
}

namespace {

// Row-wise layer norm; stores normalized rows and 1/sqrt(var+eps).
void layer_norm_forward(const Matrix& x, const Vector& gamma, const Vector& beta, Matrix& xhat,
                        Vector& inv_std, Matrix& y) {
    const Index T = x.rows();
    const Index m = x.cols();
    xhat.resize(T, m);
    inv_std.resize(T);
    y.resize(T, m);
    for (Index t = 0; t < T; ++t) {
        const double mu = x.row(t).mean();
        const double var = (x.row(t).array() - mu).square().sum() / static_cast<double>(m);
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std(t) = is;
        xhat.row(t) = (x.row(t).array() - mu) * is;
        y.row(t) = xhat.row(t).cwiseProduct(gamma.transpose()) + beta.transpose();
    }
}

void layer_norm_backward(const Matrix& dy, const Matrix& xhat, const Vector& inv_std,
                         const Vector& gamma, Matrix& dx, Vector& dgamma, Vector& dbeta) {
    const Index T = dy.rows();
    const Index m = dy.cols();
    dx.resize(T, m);
    for (Index t = 0; t < T; ++t) {
        dgamma += dy.row(t).cwiseProduct(xhat.row(t)).transpose();
        dbeta += dy.row(t).transpose();
        const Eigen::RowVectorXd h = dy.row(t).cwiseProduct(gamma.transpose());
        const double mean_h = h.mean();
        const double mean_hx = h.cwiseProduct(xhat.row(t)).mean();
        dx.row(t) = (h.array() - mean_h - xhat.row(t).array() * mean_hx) * inv_std(t);
    }
}

// Causal softmax over columns 0..t of each row.
void causal_softmax_rows(Matrix& scores) {
    const Index T = scores.rows();
    for (Index t = 0; t < T; ++t) {
        double mx = scores(t, 0);
        for (Index k = 1; k <= t; ++k) mx = std::max(mx, scores(t, k));
        double sum = 0;
        for (Index k = 0; k <= t; ++k) {
            scores(t, k) = std::exp(scores(t, k) - mx);
            sum += scores(t, k);
        }
        for (Index k = 0; k <= t; ++k) scores(t, k) /= sum;
        for (Index k = t + 1; k < T; ++k) scores(t, k) = 0;
    }
}

Vector fitted_scales(const Matrix& attn_mean) {
    const Index T = attn_mean.rows();
    Vector sigma(T);
    for (Index t = 0; t < T; ++t) {
        double mad = 0;
        for (Index k = 0; k <= t; ++k) mad += attn_mean(t, k) * static_cast<double>(t - k);
        sigma(t) = std::max(mad, kSigmaFloor);
    }
    return sigma;
}

} // namespace

ForwardCache encode_full(const Matrix& x_window, const ModelParams& params,
                         std::optional<Index> mask_series) {
    const ModelConfig& cfg = params.config;
    if (x_window.rows() != cfg.T || x_window.cols() != cfg.d) {
        std::ostringstream msg;
        msg << "encode: window is " << x_window.rows() << "x" << x_window.cols() << ", expected "
            << cfg.T << "x" << cfg.d;
        throw ConfigError(msg.str());
    }
    if (mask_series && (*mask_series < 0 || *mask_series >= cfg.d))
        throw ConfigError("encode: mask_series out of range");

    const Index T = cfg.T;
    const Index H = cfg.H;
    const Index dk = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));

    ForwardCache cache;
    cache.x_in = x_window;
    if (mask_series) cache.x_in.col(*mask_series).setZero();

    cache.x0 = (cache.x_in * params.embed_W).rowwise() + params.embed_b.transpose();
    cache.x0 += params.pos_enc;

    cache.layers.resize(static_cast<std::size_t>(cfg.L));
    const Matrix* input = &cache.x0;
    for (Index l = 0; l < cfg.L; ++l) {
        LayerCache& lc = cache.layers[static_cast<std::size_t>(l)];
        const LayerParams& lp = params.layers[static_cast<std::size_t>(l)];
        lc.input = *input;

        lc.Q.resize(static_cast<std::size_t>(H));
        lc.K.resize(static_cast<std::size_t>(H));
        lc.V.resize(static_cast<std::size_t>(H));
        lc.S.resize(static_cast<std::size_t>(H));
        lc.concat.resize(T, cfg.d_model);
        for (Index h = 0; h < H; ++h) {
            const auto hi = static_cast<std::size_t>(h);
            lc.Q[hi] = lc.input * lp.Wq[hi];
            lc.K[hi] = lc.input * lp.Wk[hi];
            lc.V[hi] = lc.input * lp.Wv[hi];
            Matrix scores = lc.Q[hi] * lc.K[hi].transpose() * scale;
            causal_softmax_rows(scores);
            lc.S[hi] = std::move(scores);
            lc.concat.middleCols(h * dk, dk) = lc.S[hi] * lc.V[hi];
        }
        lc.attn_mean = lc.S[0];
        for (Index h = 1; h < H; ++h) lc.attn_mean += lc.S[static_cast<std::size_t>(h)];
        lc.attn_mean /= static_cast<double>(H);

        lc.attn_out = lc.concat * lp.Wo;
        const Matrix res1 = lc.attn_out + lc.input;
        layer_norm_forward(res1, lp.ln1_gamma, lp.ln1_beta, lc.ln1_xhat, lc.ln1_inv_std, lc.z);

        lc.ff_pre = (lc.z * lp.W1).rowwise() + lp.b1.transpose();
        lc.ff_act = lc.ff_pre.cwiseMax(0.0);
        const Matrix ff_out = ((lc.ff_act * lp.W2).rowwise() + lp.b2.transpose()) + lc.z;
        layer_norm_forward(ff_out, lp.ln2_gamma, lp.ln2_beta, lc.ln2_xhat, lc.ln2_inv_std, lc.out);
        check_finite(lc.out, l, "activations");

        // Layer 1 priors use the learnable scales; deeper layers refit a
        // Laplace scale to the previous layer's (head-averaged) attention,
        // with no gradient through that fit.
        if (l == 0) {
            lc.sigma = Vector(T);
            for (Index t = 0; t < T; ++t) lc.sigma(t) = softplus(params.laplace_raw(0, t));
        } else {
            lc.sigma = fitted_scales(cache.layers[static_cast<std::size_t>(l - 1)].attn_mean);
        }
        lc.prior = laplace_prior(lc.sigma, T);

        input = &lc.out;
    }

    cache.head_pre = (*input * params.head_W1).rowwise() + params.head_b1.transpose();
    cache.head_act = cache.head_pre.cwiseMax(0.0);
    cache.out.x_hat = (cache.head_act * params.head_W2).rowwise() + params.head_b2.transpose();
    check_finite(cache.out.x_hat, cfg.L, "reconstruction");

    cache.out.attn.resize(static_cast<std::size_t>(cfg.L));
    cache.out.prior.resize(static_cast<std::size_t>(cfg.L));
    for (Index l = 0; l < cfg.L; ++l) {
        cache.out.attn[static_cast<std::size_t>(l)] = cache.layers[static_cast<std::size_t>(l)].S;
        cache.out.prior[static_cast<std::size_t>(l)] = cache.layers[static_cast<std::size_t>(l)].prior;
    }
    cache.out.d_div = assoc_discrepancy(cache.out.attn, cache.out.prior);
    cache.out.recon_error = (cache.x_in - cache.out.x_hat).rowwise().squaredNorm();
    return cache;
}

EncodeOutput encode_window(const Matrix& x_window, const ModelParams& params,
                           std::optional<Index> mask_series) {
    return encode_full(x_window, params, mask_series).out;
}

Reconstruction reconstruct(const Matrix& x_window, const ModelParams& params,
                           std::optional<Index> mask_series) {
    ForwardCache cache = encode_full(x_window, params, mask_series);
    return Reconstruction{std::move(cache.out.x_hat), std::move(cache.out.recon_error)};
}

Vector assoc_discrepancy(const std::vector<std::vector<Matrix>>& attn,
                         const std::vector<Matrix>& prior) {
    if (attn.empty() || attn.size() != prior.size())
        throw ConfigError("assoc_discrepancy: layer count mismatch");
    const Index L = static_cast<Index>(attn.size());
    const Index T = prior[0].rows();

    Vector d_div = Vector::Zero(T);
    for (Index l = 0; l < L; ++l) {
        const auto li = static_cast<std::size_t>(l);
        if (attn[li].empty()) throw ConfigError("assoc_discrepancy: layer without heads");
        Matrix mean = attn[li][0];
        for (std::size_t h = 1; h < attn[li].size(); ++h) mean += attn[li][h];
        mean /= static_cast<double>(attn[li].size());
        if (mean.rows() != T || prior[li].rows() != T)
            throw ConfigError("assoc_discrepancy: shape mismatch");

        for (Index t = 0; t < T; ++t) {
            const double sum_s = mean.row(t).sum();
            const double sum_p = prior[li].row(t).sum();
            if (std::abs(sum_s - 1.0) > 1e-4 || std::abs(sum_p - 1.0) > 1e-4)
                throw NumericError("assoc_discrepancy: row " + std::to_string(t) +
                                   " is not a distribution");
            const Vector p = prior[li].row(t).head(t + 1).transpose();
            const Vector s = mean.row(t).head(t + 1).transpose();
            d_div(t) += sym_kl_row(p, s, t + 1);
        }
    }
    d_div /= static_cast<double>(L);
    return d_div.cwiseMax(0.0);
}

double total_loss(const Matrix& x, const Matrix& x_hat, const Vector& d_div, double lambda) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols() || d_div.size() != x.rows())
        throw ConfigError("total_loss: shape mismatch");
    return (x - x_hat).squaredNorm() - lambda * d_div.lpNorm<1>();
}

WindowLoss window_loss(const Matrix& x_window, const ModelParams& params) {
    const ForwardCache cache = encode_full(x_window, params);
    WindowLoss out;
    out.recon = (cache.x_in - cache.out.x_hat).squaredNorm();
    out.div = cache.out.d_div.lpNorm<1>();
    out.total = out.recon - params.config.lambda * out.div;
    return out;
}

WindowLoss loss_and_gradients(const Matrix& x_window, const ModelParams& params,
                              ModelParams& grads) {
    const ModelConfig& cfg = params.config;
    const ForwardCache cache = encode_full(x_window, params);
    const Index T = cfg.T;
    const Index H = cfg.H;
    const Index dk = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
    const double lambda = cfg.lambda;

    WindowLoss loss;
    loss.recon = (cache.x_in - cache.out.x_hat).squaredNorm();
    loss.div = cache.out.d_div.lpNorm<1>();
    loss.total = loss.recon - lambda * loss.div;

    // Reconstruction head.
    const Matrix d_xhat = 2.0 * (cache.out.x_hat - cache.x_in);
    const Matrix& xl = cache.layers.back().out;
    grads.head_W2 += cache.head_act.transpose() * d_xhat;
    grads.head_b2 += d_xhat.colwise().sum().transpose();
    Matrix d_act = d_xhat * params.head_W2.transpose();
    Matrix d_pre = (cache.head_pre.array() > 0.0).select(d_act, 0.0);
    grads.head_W1 += xl.transpose() * d_pre;
    grads.head_b1 += d_pre.colwise().sum().transpose();
    Matrix d_out = d_pre * params.head_W1.transpose();

    // Divergence gradients w.r.t. each layer's head-averaged attention, plus
    // the layer-1 prior scale path. coef carries d(loss)/d(KL term).
    const double coef = -lambda / static_cast<double>(cfg.L);
    std::vector<Matrix> d_attn_mean(static_cast<std::size_t>(cfg.L));
    for (Index l = 0; l < cfg.L; ++l) {
        const auto li = static_cast<std::size_t>(l);
        const LayerCache& lc = cache.layers[li];
        d_attn_mean[li] = Matrix::Zero(T, T);
        std::vector<double> gp(static_cast<std::size_t>(T)), gs(static_cast<std::size_t>(T));
        for (Index t = 0; t < T; ++t) {
            const Index n = t + 1;
            const Vector p = lc.prior.row(t).head(n).transpose();
            const Vector s = lc.attn_mean.row(t).head(n).transpose();
            sym_kl_row(p, s, n, gp.data(), gs.data());
            for (Index k = 0; k < n; ++k) d_attn_mean[li](t, k) += coef * gs[static_cast<std::size_t>(k)];
            if (l == 0) {
                // dP/dsigma for a normalized Laplace row, then softplus'.
                double mad = 0;
                for (Index k = 0; k < n; ++k) mad += p(k) * static_cast<double>(t - k);
                const double sig = lc.sigma(t);
                double d_sigma = 0;
                for (Index k = 0; k < n; ++k) {
                    const double dp = p(k) * (static_cast<double>(t - k) - mad) / (sig * sig);
                    d_sigma += coef * gp[static_cast<std::size_t>(k)] * dp;
                }
                grads.laplace_raw(0, t) += d_sigma * logistic(params.laplace_raw(0, t));
            }
        }
    }

    // Encoder layers in reverse.
    for (Index l = cfg.L - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        const LayerCache& lc = cache.layers[li];
        const LayerParams& lp = params.layers[li];
        LayerParams& lg = grads.layers[li];

        Matrix d_res2;
        layer_norm_backward(d_out, lc.ln2_xhat, lc.ln2_inv_std, lp.ln2_gamma, d_res2, lg.ln2_gamma,
                            lg.ln2_beta);
        // res2 = ff_out + z
        Matrix d_z = d_res2;
        lg.W2 += lc.ff_act.transpose() * d_res2;
        lg.b2 += d_res2.colwise().sum().transpose();
        Matrix d_ff_act = d_res2 * lp.W2.transpose();
        Matrix d_ff_pre = (lc.ff_pre.array() > 0.0).select(d_ff_act, 0.0);
        lg.W1 += lc.z.transpose() * d_ff_pre;
        lg.b1 += d_ff_pre.colwise().sum().transpose();
        d_z += d_ff_pre * lp.W1.transpose();

        Matrix d_res1;
        layer_norm_backward(d_z, lc.ln1_xhat, lc.ln1_inv_std, lp.ln1_gamma, d_res1, lg.ln1_gamma,
                            lg.ln1_beta);
        // res1 = attn_out + input
        Matrix d_in = d_res1;
        lg.Wo += lc.concat.transpose() * d_res1;
        const Matrix d_concat = d_res1 * lp.Wo.transpose();

        for (Index h = 0; h < H; ++h) {
            const auto hi = static_cast<std::size_t>(h);
            const Matrix d_Z = d_concat.middleCols(h * dk, dk);
            Matrix d_S = d_Z * lc.V[hi].transpose();
            d_S += d_attn_mean[li] / static_cast<double>(H);
            const Matrix d_V = lc.S[hi].transpose() * d_Z;

            // Softmax backward, restricted to the causal support.
            Matrix d_scores = Matrix::Zero(T, T);
            for (Index t = 0; t < T; ++t) {
                double dot = 0;
                for (Index k = 0; k <= t; ++k) dot += d_S(t, k) * lc.S[hi](t, k);
                for (Index k = 0; k <= t; ++k)
                    d_scores(t, k) = lc.S[hi](t, k) * (d_S(t, k) - dot);
            }
            const Matrix d_Q = d_scores * lc.K[hi] * scale;
            const Matrix d_K = d_scores.transpose() * lc.Q[hi] * scale;

            lg.Wq[hi] += lc.input.transpose() * d_Q;
            lg.Wk[hi] += lc.input.transpose() * d_K;
            lg.Wv[hi] += lc.input.transpose() * d_V;
            d_in += d_Q * lp.Wq[hi].transpose() + d_K * lp.Wk[hi].transpose() +
                    d_V * lp.Wv[hi].transpose();
        }
        d_out = std::move(d_in);
    }

    grads.embed_W += cache.x_in.transpose() * d_out;
    grads.embed_b += d_out.colwise().sum().transpose();
    return loss;
}

} // namespace mtsdiag
