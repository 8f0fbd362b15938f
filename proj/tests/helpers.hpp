#pragma once

// Test-only oracles, deliberately independent of the library's own code
// paths: a straight-line LSTM evaluation written directly from the gate
// formulas, a central finite-difference gradient checker, and the O(n^2)
// pairwise Mann-Whitney statistic for AUC.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "meterae/autoencoder.hpp"
#include "meterae/lstm.hpp"
#include "meterae/train.hpp"

namespace oracle {

// One LSTM step evaluated with nothing but scalar loops and the formulas.
inline void lstm_step(const meterae::LstmParams& p, const std::vector<double>& x,
                      std::vector<double>& h, std::vector<double>& c) {
    const std::size_t H = p.W_ii.rows;
    const std::size_t I = p.W_ii.cols;
    std::vector<double> i(H), f(H), g(H), o(H), new_c(H), new_h(H);
    for (std::size_t k = 0; k < H; ++k) {
        double ai = p.b_ii[k] + p.b_hi[k];
        double af = p.b_if[k] + p.b_hf[k];
        double ag = p.b_ig[k] + p.b_hg[k];
        double ao = p.b_io[k] + p.b_ho[k];
        for (std::size_t j = 0; j < I; ++j) {
            ai += p.W_ii.data[k * I + j] * x[j];
            af += p.W_if.data[k * I + j] * x[j];
            ag += p.W_ig.data[k * I + j] * x[j];
            ao += p.W_io.data[k * I + j] * x[j];
        }
        for (std::size_t j = 0; j < H; ++j) {
            ai += p.W_hi.data[k * H + j] * h[j];
            af += p.W_hf.data[k * H + j] * h[j];
            ag += p.W_hg.data[k * H + j] * h[j];
            ao += p.W_ho.data[k * H + j] * h[j];
        }
        i[k] = 1.0 / (1.0 + std::exp(-ai));
        f[k] = 1.0 / (1.0 + std::exp(-af));
        g[k] = std::tanh(ag);
        o[k] = 1.0 / (1.0 + std::exp(-ao));
    }
    for (std::size_t k = 0; k < H; ++k) {
        new_c[k] = f[k] * c[k] + i[k] * g[k];
        new_h[k] = o[k] * std::tanh(new_c[k]);
    }
    h = new_h;
    c = new_c;
}

// Whole-autoencoder forward written from scratch: encoder halves, latent
// concatenation, repeat-vector decoder, projection, mean squared error.
inline double autoencoder_loss(const meterae::AutoencoderModel& m,
                               const meterae::Window& w) {
    const std::size_t H = m.arch.encoder_hidden;
    std::vector<double> hf(H, 0.0), cf(H, 0.0);
    for (const auto& x : w.values) lstm_step(m.encoder_fwd, x, hf, cf);
    std::vector<double> latent = hf;
    if (m.encoder_bwd) {
        std::vector<double> hb(H, 0.0), cb(H, 0.0);
        for (auto it = w.values.rbegin(); it != w.values.rend(); ++it)
            lstm_step(*m.encoder_bwd, *it, hb, cb);
        latent.insert(latent.end(), hb.begin(), hb.end());
    }
    std::vector<double> hd(m.arch.decoder_hidden, 0.0), cd(m.arch.decoder_hidden, 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < w.length(); ++t) {
        lstm_step(m.decoder, latent, hd, cd);
        for (std::size_t ch = 0; ch < m.arch.channels; ++ch) {
            double y = m.proj_b[ch];
            for (std::size_t k = 0; k < m.arch.decoder_hidden; ++k)
                y += m.proj_w.data[ch * m.arch.decoder_hidden + k] * hd[k];
            const double d = y - w.values[t][ch];
            total += d * d;
        }
    }
    return total / static_cast<double>(w.length() * m.arch.channels);
}

// Central finite differences of `loss` w.r.t. one scalar parameter.
inline double central_difference(std::function<double()> loss, double& param,
                                 double step = 1e-5) {
    const double saved = param;
    param = saved + step;
    const double up = loss();
    param = saved - step;
    const double down = loss();
    param = saved;
    return (up - down) / (2.0 * step);
}

// P(score_pos > score_neg) + 0.5 P(score_pos == score_neg) over all pairs.
inline double mann_whitney_auc(const std::vector<double>& scores,
                               const std::vector<bool>& truth) {
    double favorable = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!truth[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (truth[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                favorable += 1.0;
            else if (scores[i] == scores[j])
                favorable += 0.5;
        }
    }
    return favorable / static_cast<double>(pairs);
}

// Relative error with an absolute floor for near-zero references.
inline double rel_err(double got, double want, double floor = 1e-7) {
    const double denom = std::max(std::fabs(want), floor);
    return std::fabs(got - want) / denom;
}

}  // namespace oracle
