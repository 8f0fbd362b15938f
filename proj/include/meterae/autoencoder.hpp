#pragma once

// Sequence autoencoder: a bidirectional (or plain) LSTM encoder compresses a
// window into the concatenation of the final hidden states, and a decoder
// LSTM fed that latent vector at every timestep reconstructs the window
// through a linear output projection. Reconstruction error against the input
// is the anomaly signal downstream.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meterae/linalg.hpp"
#include "meterae/lstm.hpp"

namespace meterae {

// One fixed-length slice of a household's multichannel series.
// values[t][c], channels ordered electricity, water, heating, hot water.
struct Window {
    std::vector<Vector> values;
    std::int64_t origin = 0;  // unix seconds of the first step
    std::string household;

    std::size_t length() const { return values.size(); }
    std::size_t channels() const { return values.empty() ? 0 : values[0].size(); }
};

struct Reconstruction {
    std::vector<Vector> values;  // same shape as the source window
};

struct ModelArch {
    std::size_t window_length = 96;
    std::size_t channels = 4;
    std::size_t encoder_hidden = 32;
    std::size_t decoder_hidden = 32;
    bool bidirectional = true;

    std::size_t latent_width() const {
        return bidirectional ? 2 * encoder_hidden : encoder_hidden;
    }
};

struct AutoencoderModel {
    ModelArch arch;
    LstmParams encoder_fwd;
    std::optional<LstmParams> encoder_bwd;  // absent for the uni-directional baseline
    LstmParams decoder;                     // input width = latent width
    Matrix proj_w;                          // channels x decoder_hidden
    Vector proj_b;                          // channels
};

struct ModelGrads {
    LstmGrads encoder_fwd;
    std::optional<LstmGrads> encoder_bwd;
    LstmGrads decoder;
    Matrix proj_w;
    Vector proj_b;
};

inline AutoencoderModel make_model(const ModelArch& arch, Rng& rng) {
    AutoencoderModel m;
    m.arch = arch;
    m.encoder_fwd = make_lstm_params(arch.channels, arch.encoder_hidden, rng);
    if (arch.bidirectional)
        m.encoder_bwd = make_lstm_params(arch.channels, arch.encoder_hidden, rng);
    m.decoder = make_lstm_params(arch.latent_width(), arch.decoder_hidden, rng);
    m.proj_w = xavier_init(arch.channels, arch.decoder_hidden, rng);
    m.proj_b.assign(arch.channels, 0.0);
    return m;
}

inline ModelGrads zero_model_grads(const AutoencoderModel& m) {
    ModelGrads g;
    g.encoder_fwd = zero_lstm_grads(m.encoder_fwd);
    if (m.encoder_bwd) g.encoder_bwd = zero_lstm_grads(*m.encoder_bwd);
    g.decoder = zero_lstm_grads(m.decoder);
    g.proj_w = Matrix(m.proj_w.rows, m.proj_w.cols);
    g.proj_b.assign(m.proj_b.size(), 0.0);
    return g;
}

inline void check_window(const AutoencoderModel& m, const Window& w) {
    if (w.length() != m.arch.window_length)
        throw_dim("window length " + std::to_string(w.length()) + ", model expects " +
                  std::to_string(m.arch.window_length));
    for (const auto& row : w.values)
        if (row.size() != m.arch.channels)
            throw_dim("window has " + std::to_string(row.size()) +
                      " channels, model expects " + std::to_string(m.arch.channels));
}

// Latent = [final forward hidden ; final backward hidden]. The backward
// half's final state is the one produced after consuming x_1.
inline Vector encode(const AutoencoderModel& m, const Window& w) {
    check_window(m, w);
    auto [fwd_states, fwd_caches] = lstm_sequence_forward(
        m.encoder_fwd, w.values, zero_state(m.arch.encoder_hidden));
    Vector latent = fwd_states.back().h;
    if (m.encoder_bwd) {
        std::vector<Vector> reversed(w.values.rbegin(), w.values.rend());
        auto [bwd_states, bwd_caches] = lstm_sequence_forward(
            *m.encoder_bwd, reversed, zero_state(m.arch.encoder_hidden));
        const Vector& bh = bwd_states.back().h;
        latent.insert(latent.end(), bh.begin(), bh.end());
    }
    return latent;
}

// Repeat-vector decoding: the latent is the decoder input at every timestep,
// h_0 = c_0 = 0, and each hidden state maps through the projection.
inline Reconstruction decode(const AutoencoderModel& m, const Vector& latent,
                             std::size_t length) {
    if (latent.size() != m.arch.latent_width())
        throw_dim("latent width " + std::to_string(latent.size()) +
                  ", decoder expects " + std::to_string(m.arch.latent_width()));
    std::vector<Vector> inputs(length, latent);
    auto [states, caches] =
        lstm_sequence_forward(m.decoder, inputs, zero_state(m.arch.decoder_hidden));
    Reconstruction r;
    r.values.resize(length);
    for (std::size_t t = 0; t < length; ++t) {
        r.values[t] = matvec(m.proj_w, states[t].h);
        add_into(r.values[t], m.proj_b);
    }
    return r;
}

inline Reconstruction reconstruct(const AutoencoderModel& m, const Window& w) {
    return decode(m, encode(m, w), w.length());
}

// Mean over all length x channels entries of the squared difference.
inline double mse_loss(const Window& w, const Reconstruction& r) {
    if (w.values.size() != r.values.size())
        throw_dim("mse_loss: window length " + std::to_string(w.values.size()) +
                  " vs reconstruction length " + std::to_string(r.values.size()));
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < w.values.size(); ++t) {
        if (w.values[t].size() != r.values[t].size())
            throw_dim("mse_loss: channel count differs at step " + std::to_string(t));
        for (std::size_t c = 0; c < w.values[t].size(); ++c) {
            const double d = r.values[t][c] - w.values[t][c];
            total += d * d;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("mse_loss: empty window");
    return total / static_cast<double>(count);
}

namespace detail {

// Forward pass with everything retained for the reverse pass.
struct ForwardTrace {
    std::vector<GateCache> enc_fwd_caches;
    std::vector<GateCache> enc_bwd_caches;  // over the reversed window
    Vector latent;                          // post-dropout when a mask is given
    std::vector<GateCache> dec_caches;
    Reconstruction recon;
    double loss = 0.0;
};

inline ForwardTrace forward_trace(const AutoencoderModel& m, const Window& w,
                                  const Vector* dropout_mask) {
    check_window(m, w);
    ForwardTrace tr;

    auto fwd = lstm_sequence_forward(m.encoder_fwd, w.values,
                                     zero_state(m.arch.encoder_hidden));
    tr.enc_fwd_caches = std::move(fwd.second);
    Vector latent = fwd.first.back().h;
    if (m.encoder_bwd) {
        std::vector<Vector> reversed(w.values.rbegin(), w.values.rend());
        auto bwd = lstm_sequence_forward(*m.encoder_bwd, reversed,
                                         zero_state(m.arch.encoder_hidden));
        tr.enc_bwd_caches = std::move(bwd.second);
        const Vector& bh = bwd.first.back().h;
        latent.insert(latent.end(), bh.begin(), bh.end());
    }
    if (dropout_mask) {
        if (dropout_mask->size() != latent.size())
            throw_dim("dropout mask width " + std::to_string(dropout_mask->size()) +
                      " vs latent width " + std::to_string(latent.size()));
        for (std::size_t k = 0; k < latent.size(); ++k) latent[k] *= (*dropout_mask)[k];
    }
    tr.latent = std::move(latent);

    std::vector<Vector> dec_inputs(w.length(), tr.latent);
    auto dec = lstm_sequence_forward(m.decoder, dec_inputs,
                                     zero_state(m.arch.decoder_hidden));
    tr.dec_caches = std::move(dec.second);

    tr.recon.values.resize(w.length());
    for (std::size_t t = 0; t < w.length(); ++t) {
        tr.recon.values[t] = matvec(m.proj_w, dec.first[t].h);
        add_into(tr.recon.values[t], m.proj_b);
    }
    tr.loss = mse_loss(w, tr.recon);
    return tr;
}

// Reverse pass of mse_loss(w, reconstruct(w)) given a completed trace.
inline ModelGrads backward_trace(const AutoencoderModel& m, const Window& w,
                                 const ForwardTrace& tr, const Vector* dropout_mask) {
    const std::size_t T = w.length();
    const std::size_t C = m.arch.channels;
    const double scale = 2.0 / static_cast<double>(T * C);

    ModelGrads grads = zero_model_grads(m);

    // Projection layer and upstream gradients for the decoder hidden states.
    std::vector<Vector> dec_upstream(T);
    Vector dyhat(C);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c)
            dyhat[c] = scale * (tr.recon.values[t][c] - w.values[t][c]);
        outer_add(grads.proj_w, dyhat, tr.dec_caches[t].h);
        add_into(grads.proj_b, dyhat);
        dec_upstream[t].assign(m.arch.decoder_hidden, 0.0);
        matvec_transpose_add(m.proj_w, dyhat, dec_upstream[t]);
    }

    // Decoder BPTT; its per-step input gradients all accumulate on the latent.
    auto [dec_grads, dec_input_grads] = lstm_backward(tr.dec_caches, m.decoder, dec_upstream);
    grads.decoder = std::move(dec_grads);
    Vector dlatent(m.arch.latent_width(), 0.0);
    for (const auto& gi : dec_input_grads) add_into(dlatent, gi);

    if (dropout_mask)
        for (std::size_t k = 0; k < dlatent.size(); ++k) dlatent[k] *= (*dropout_mask)[k];

    // Encoder halves receive gradient only at their final step.
    const std::size_t eh = m.arch.encoder_hidden;
    std::vector<Vector> enc_upstream(T, Vector(eh, 0.0));
    enc_upstream.back().assign(dlatent.begin(), dlatent.begin() + eh);
    auto [fwd_grads, fwd_input_grads] =
        lstm_backward(tr.enc_fwd_caches, m.encoder_fwd, enc_upstream);
    grads.encoder_fwd = std::move(fwd_grads);

    if (m.encoder_bwd) {
        enc_upstream.assign(T, Vector(eh, 0.0));
        enc_upstream.back().assign(dlatent.begin() + eh, dlatent.end());
        auto [bwd_grads, bwd_input_grads] =
            lstm_backward(tr.enc_bwd_caches, *m.encoder_bwd, enc_upstream);
        grads.encoder_bwd = std::move(bwd_grads);
    }
    return grads;
}

}  // namespace detail

// Gradient of mse_loss(w, reconstruct(m, w)) w.r.t. every model parameter.
inline ModelGrads loss_backward(const AutoencoderModel& m, const Window& w) {
    auto trace = detail::forward_trace(m, w, nullptr);
    return detail::backward_trace(m, w, trace, nullptr);
}

// Training-path variant: returns the loss of this pass alongside gradients,
// with inverted-dropout mask applied to the latent.
inline std::pair<double, ModelGrads> loss_backward_masked(const AutoencoderModel& m,
                                                          const Window& w,
                                                          const Vector& mask) {
    auto trace = detail::forward_trace(m, w, &mask);
    return {trace.loss, detail::backward_trace(m, w, trace, &mask)};
}

// Enumerate every parameter tensor (or gradient tensor) in a fixed order.
template <typename Model, typename F>
void for_each_model_tensor(Model& m, F&& fn) {
    for_each_lstm_tensor(m.encoder_fwd, "encoder_fwd", fn);
    if (m.encoder_bwd) for_each_lstm_tensor(*m.encoder_bwd, "encoder_bwd", fn);
    for_each_lstm_tensor(m.decoder, "decoder", fn);
    fn("proj_w", m.proj_w);
    fn("proj_b", m.proj_b);
}

}  // namespace meterae
