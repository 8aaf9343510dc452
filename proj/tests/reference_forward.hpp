#pragma once

// Scratch transformer forward pass written with plain loops over
// std::vector, independent of the Eigen-based implementation. Used as the
// numerical oracle for the encoder.

#include <cmath>
#include <vector>

#include "mtsdiag/model.hpp"

namespace refimpl {

using Mat = std::vector<std::vector<double>>;

inline Mat make(std::size_t rows, std::size_t cols) {
    return Mat(rows, std::vector<double>(cols, 0.0));
}

inline Mat from_eigen(const mtsdiag::Matrix& m) {
    Mat out = make(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (mtsdiag::Index r = 0; r < m.rows(); ++r)
        for (mtsdiag::Index c = 0; c < m.cols(); ++c)
            out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
    return out;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat out = make(a.size(), b[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

struct RefOutput {
    Mat x_hat;
    std::vector<std::vector<Mat>> attn; // [layer][head]
};

inline RefOutput encode_reference(const mtsdiag::Matrix& window,
                                  const mtsdiag::ModelParams& params) {
    const auto& cfg = params.config;
    const auto T = static_cast<std::size_t>(cfg.T);
    const auto d = static_cast<std::size_t>(cfg.d);
    const auto dm = static_cast<std::size_t>(cfg.d_model);
    const auto H = static_cast<std::size_t>(cfg.H);
    const auto dk = dm / H;
    const double eps = 1e-5;

    // Embedding + sinusoidal positions.
    Mat x = make(T, dm);
    const Mat we = from_eigen(params.embed_W);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < dm; ++j) {
            double acc = params.embed_b(static_cast<mtsdiag::Index>(j));
            for (std::size_t i = 0; i < d; ++i)
                acc += window(static_cast<mtsdiag::Index>(t), static_cast<mtsdiag::Index>(i)) * we[i][j];
            const double expo = static_cast<double>(j - (j % 2)) / static_cast<double>(dm);
            const double angle = static_cast<double>(t) / std::pow(10000.0, expo);
            x[t][j] = acc + ((j % 2 == 0) ? std::sin(angle) : std::cos(angle));
        }

    auto layer_norm = [&](const Mat& in, const mtsdiag::Vector& gamma,
                          const mtsdiag::Vector& beta) {
        Mat out = make(T, dm);
        for (std::size_t t = 0; t < T; ++t) {
            double mu = 0;
            for (std::size_t j = 0; j < dm; ++j) mu += in[t][j];
            mu /= static_cast<double>(dm);
            double var = 0;
            for (std::size_t j = 0; j < dm; ++j) var += (in[t][j] - mu) * (in[t][j] - mu);
            var /= static_cast<double>(dm);
            for (std::size_t j = 0; j < dm; ++j)
                out[t][j] = gamma(static_cast<mtsdiag::Index>(j)) * (in[t][j] - mu) /
                                std::sqrt(var + eps) +
                            beta(static_cast<mtsdiag::Index>(j));
        }
        return out;
    };

    RefOutput result;
    for (std::size_t l = 0; l < static_cast<std::size_t>(cfg.L); ++l) {
        const auto& lp = params.layers[l];
        Mat concat = make(T, dm);
        std::vector<Mat> heads;
        for (std::size_t h = 0; h < H; ++h) {
            const Mat q = matmul(x, from_eigen(lp.Wq[h]));
            const Mat k = matmul(x, from_eigen(lp.Wk[h]));
            const Mat v = matmul(x, from_eigen(lp.Wv[h]));
            Mat s = make(T, T);
            for (std::size_t t = 0; t < T; ++t) {
                double sum = 0;
                for (std::size_t u = 0; u <= t; ++u) {
                    double dot = 0;
                    for (std::size_t j = 0; j < dk; ++j) dot += q[t][j] * k[u][j];
                    s[t][u] = std::exp(dot / std::sqrt(static_cast<double>(dm)));
                    sum += s[t][u];
                }
                for (std::size_t u = 0; u <= t; ++u) s[t][u] /= sum;
            }
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t j = 0; j < dk; ++j) {
                    double acc = 0;
                    for (std::size_t u = 0; u <= t; ++u) acc += s[t][u] * v[u][j];
                    concat[t][h * dk + j] = acc;
                }
            heads.push_back(std::move(s));
        }
        result.attn.push_back(std::move(heads));

        Mat res1 = matmul(concat, from_eigen(lp.Wo));
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t j = 0; j < dm; ++j) res1[t][j] += x[t][j];
        const Mat z = layer_norm(res1, lp.ln1_gamma, lp.ln1_beta);

        const auto ff = static_cast<std::size_t>(cfg.resolved_ff_hidden());
        Mat hidden = matmul(z, from_eigen(lp.W1));
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t j = 0; j < ff; ++j) {
                hidden[t][j] += lp.b1(static_cast<mtsdiag::Index>(j));
                if (hidden[t][j] < 0) hidden[t][j] = 0;
            }
        Mat res2 = matmul(hidden, from_eigen(lp.W2));
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t j = 0; j < dm; ++j) res2[t][j] += lp.b2(static_cast<mtsdiag::Index>(j)) + z[t][j];
        x = layer_norm(res2, lp.ln2_gamma, lp.ln2_beta);
    }

    const auto mh = static_cast<std::size_t>(cfg.resolved_mlp_hidden());
    Mat hidden = matmul(x, from_eigen(params.head_W1));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < mh; ++j) {
            hidden[t][j] += params.head_b1(static_cast<mtsdiag::Index>(j));
            if (hidden[t][j] < 0) hidden[t][j] = 0;
        }
    result.x_hat = matmul(hidden, from_eigen(params.head_W2));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < d; ++j)
            result.x_hat[t][j] += params.head_b2(static_cast<mtsdiag::Index>(j));
    return result;
}

} // namespace refimpl
