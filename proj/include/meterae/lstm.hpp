#pragma once

// LSTM cell and sequence machinery.
//
// Gate equations per step:
//   i_t = sigmoid(W_ii x_t + b_ii + W_hi h_{t-1} + b_hi)
//   f_t = sigmoid(W_if x_t + b_if + W_hf h_{t-1} + b_hf)
//   g_t = tanh   (W_ig x_t + b_ig + W_hg h_{t-1} + b_hg)
//   o_t = sigmoid(W_io x_t + b_io + W_ho h_{t-1} + b_ho)
//   c_t = f_t * c_{t-1} + i_t * g_t
//   h_t = o_t * tanh(c_t)
//
// Input and recurrent biases are kept as separate parameters even though only
// their sum enters the preactivations; the training code treats them as two
// independent tensors.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meterae/linalg.hpp"

namespace meterae {

struct LstmParams {
    // Input weights, each hidden x input.
    Matrix W_ii, W_if, W_ig, W_io;
    // Recurrent weights, each hidden x hidden.
    Matrix W_hi, W_hf, W_hg, W_ho;
    // Input biases, each length hidden.
    Vector b_ii, b_if, b_ig, b_io;
    // Recurrent biases, each length hidden.
    Vector b_hi, b_hf, b_hg, b_ho;

    std::size_t input_size() const { return W_ii.cols; }
    std::size_t hidden_size() const { return W_ii.rows; }
};

struct LstmState {
    Vector h;
    Vector c;
};

// Everything the backward pass needs about one forward step.
struct GateCache {
    Vector i, f, g, o;  // gate activations
    Vector c;           // cell state after the step
    Vector h;           // hidden state after the step
    Vector x;           // the input consumed at this step
};

struct BiLstmParams {
    LstmParams forward;
    LstmParams backward;
};

// Gradients w.r.t. every tensor in LstmParams, same shapes.
struct LstmGrads {
    Matrix W_ii, W_if, W_ig, W_io;
    Matrix W_hi, W_hf, W_hg, W_ho;
    Vector b_ii, b_if, b_ig, b_io;
    Vector b_hi, b_hf, b_hg, b_ho;
};

inline LstmParams make_lstm_params(std::size_t input_size, std::size_t hidden_size,
                                   Rng& rng) {
    LstmParams p;
    p.W_ii = xavier_init(hidden_size, input_size, rng);
    p.W_if = xavier_init(hidden_size, input_size, rng);
    p.W_ig = xavier_init(hidden_size, input_size, rng);
    p.W_io = xavier_init(hidden_size, input_size, rng);
    p.W_hi = xavier_init(hidden_size, hidden_size, rng);
    p.W_hf = xavier_init(hidden_size, hidden_size, rng);
    p.W_hg = xavier_init(hidden_size, hidden_size, rng);
    p.W_ho = xavier_init(hidden_size, hidden_size, rng);
    p.b_ii.assign(hidden_size, 0.0);
    p.b_if.assign(hidden_size, 0.0);
    p.b_ig.assign(hidden_size, 0.0);
    p.b_io.assign(hidden_size, 0.0);
    p.b_hi.assign(hidden_size, 0.0);
    p.b_hf.assign(hidden_size, 0.0);
    p.b_hg.assign(hidden_size, 0.0);
    p.b_ho.assign(hidden_size, 0.0);
    return p;
}

inline LstmParams zero_lstm_params(std::size_t input_size, std::size_t hidden_size) {
    LstmParams p;
    p.W_ii = Matrix(hidden_size, input_size);
    p.W_if = Matrix(hidden_size, input_size);
    p.W_ig = Matrix(hidden_size, input_size);
    p.W_io = Matrix(hidden_size, input_size);
    p.W_hi = Matrix(hidden_size, hidden_size);
    p.W_hf = Matrix(hidden_size, hidden_size);
    p.W_hg = Matrix(hidden_size, hidden_size);
    p.W_ho = Matrix(hidden_size, hidden_size);
    p.b_ii.assign(hidden_size, 0.0);
    p.b_if.assign(hidden_size, 0.0);
    p.b_ig.assign(hidden_size, 0.0);
    p.b_io.assign(hidden_size, 0.0);
    p.b_hi.assign(hidden_size, 0.0);
    p.b_hf.assign(hidden_size, 0.0);
    p.b_hg.assign(hidden_size, 0.0);
    p.b_ho.assign(hidden_size, 0.0);
    return p;
}

inline LstmGrads zero_lstm_grads(const LstmParams& p) {
    LstmGrads g;
    g.W_ii = Matrix(p.W_ii.rows, p.W_ii.cols);
    g.W_if = Matrix(p.W_if.rows, p.W_if.cols);
    g.W_ig = Matrix(p.W_ig.rows, p.W_ig.cols);
    g.W_io = Matrix(p.W_io.rows, p.W_io.cols);
    g.W_hi = Matrix(p.W_hi.rows, p.W_hi.cols);
    g.W_hf = Matrix(p.W_hf.rows, p.W_hf.cols);
    g.W_hg = Matrix(p.W_hg.rows, p.W_hg.cols);
    g.W_ho = Matrix(p.W_ho.rows, p.W_ho.cols);
    g.b_ii.assign(p.b_ii.size(), 0.0);
    g.b_if.assign(p.b_if.size(), 0.0);
    g.b_ig.assign(p.b_ig.size(), 0.0);
    g.b_io.assign(p.b_io.size(), 0.0);
    g.b_hi.assign(p.b_hi.size(), 0.0);
    g.b_hf.assign(p.b_hf.size(), 0.0);
    g.b_hg.assign(p.b_hg.size(), 0.0);
    g.b_ho.assign(p.b_ho.size(), 0.0);
    return g;
}

inline LstmState zero_state(std::size_t hidden_size) {
    return LstmState{Vector(hidden_size, 0.0), Vector(hidden_size, 0.0)};
}

namespace detail {

// preact = W_x x + b_x + W_h h + b_h
inline void gate_preact(const Matrix& W_x, const Vector& b_x, const Matrix& W_h,
                        const Vector& b_h, const Vector& x, const Vector& h,
                        Vector& preact) {
    const std::size_t n = W_x.rows;
    preact.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* wx = W_x.row(r);
        double acc = b_x[r] + b_h[r];
        for (std::size_t c = 0; c < W_x.cols; ++c) acc += wx[c] * x[c];
        const double* wh = W_h.row(r);
        for (std::size_t c = 0; c < W_h.cols; ++c) acc += wh[c] * h[c];
        preact[r] = acc;
    }
}

}  // namespace detail

inline std::pair<LstmState, GateCache> lstm_cell_forward(const LstmParams& p,
                                                         const Vector& x_t,
                                                         const LstmState& prev) {
    const std::size_t hidden = p.hidden_size();
    if (x_t.size() != p.input_size())
        throw_dim("lstm_cell_forward: input length " + std::to_string(x_t.size()) +
                  ", expected " + std::to_string(p.input_size()));
    if (prev.h.size() != hidden || prev.c.size() != hidden)
        throw_dim("lstm_cell_forward: state size " + std::to_string(prev.h.size()) +
                  "/" + std::to_string(prev.c.size()) + ", expected " +
                  std::to_string(hidden));

    GateCache cache;
    Vector pre;
    detail::gate_preact(p.W_ii, p.b_ii, p.W_hi, p.b_hi, x_t, prev.h, pre);
    cache.i.resize(hidden);
    for (std::size_t k = 0; k < hidden; ++k) cache.i[k] = sigmoid(pre[k]);

    detail::gate_preact(p.W_if, p.b_if, p.W_hf, p.b_hf, x_t, prev.h, pre);
    cache.f.resize(hidden);
    for (std::size_t k = 0; k < hidden; ++k) cache.f[k] = sigmoid(pre[k]);

    detail::gate_preact(p.W_ig, p.b_ig, p.W_hg, p.b_hg, x_t, prev.h, pre);
    cache.g.resize(hidden);
    for (std::size_t k = 0; k < hidden; ++k) cache.g[k] = tanh_act(pre[k]);

    detail::gate_preact(p.W_io, p.b_io, p.W_ho, p.b_ho, x_t, prev.h, pre);
    cache.o.resize(hidden);
    for (std::size_t k = 0; k < hidden; ++k) cache.o[k] = sigmoid(pre[k]);

    LstmState next;
    next.c.resize(hidden);
    next.h.resize(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
        next.c[k] = cache.f[k] * prev.c[k] + cache.i[k] * cache.g[k];
        next.h[k] = cache.o[k] * tanh_act(next.c[k]);
    }
    cache.c = next.c;
    cache.h = next.h;
    cache.x = x_t;
    return {next, cache};
}

inline std::pair<std::vector<LstmState>, std::vector<GateCache>> lstm_sequence_forward(
    const LstmParams& p, const std::vector<Vector>& xs, const LstmState& init) {
    if (xs.empty())
        throw std::invalid_argument("lstm_sequence_forward: empty sequence");
    std::vector<LstmState> states;
    std::vector<GateCache> caches;
    states.reserve(xs.size());
    caches.reserve(xs.size());
    const LstmState* prev = &init;
    for (const auto& x : xs) {
        auto [state, cache] = lstm_cell_forward(p, x, *prev);
        states.push_back(std::move(state));
        caches.push_back(std::move(cache));
        prev = &states.back();
    }
    return {std::move(states), std::move(caches)};
}

// Output at step t is [h_fwd_t ; h_bwd_t] where the backward half comes from
// running the second LSTM over the reversed sequence and re-aligning its
// states to original time order. Output width is 2 * hidden.
inline std::vector<Vector> bilstm_forward(const BiLstmParams& p,
                                          const std::vector<Vector>& xs) {
    if (xs.empty()) throw std::invalid_argument("bilstm_forward: empty sequence");
    const std::size_t T = xs.size();
    const std::size_t hidden = p.forward.hidden_size();

    auto [fwd_states, fwd_caches] =
        lstm_sequence_forward(p.forward, xs, zero_state(hidden));

    std::vector<Vector> reversed(xs.rbegin(), xs.rend());
    auto [bwd_states, bwd_caches] =
        lstm_sequence_forward(p.backward, reversed, zero_state(p.backward.hidden_size()));

    std::vector<Vector> out(T);
    for (std::size_t t = 0; t < T; ++t) {
        Vector& row = out[t];
        row = fwd_states[t].h;
        const Vector& bh = bwd_states[T - 1 - t].h;  // state produced at original position t
        row.insert(row.end(), bh.begin(), bh.end());
    }
    return out;
}

// Reverse-mode pass over a cached forward run. `upstream[t]` is dLoss/dh_t.
// Returns parameter gradients and dLoss/dx_t per step. The initial state is
// taken to be the zero state unless given.
inline std::pair<LstmGrads, std::vector<Vector>> lstm_backward(
    const std::vector<GateCache>& caches, const LstmParams& p,
    const std::vector<Vector>& upstream, const LstmState* init = nullptr) {
    if (caches.size() != upstream.size())
        throw_dim("lstm_backward: " + std::to_string(caches.size()) + " caches vs " +
                  std::to_string(upstream.size()) + " upstream gradients");
    if (caches.empty())
        throw std::invalid_argument("lstm_backward: empty sequence");

    const std::size_t hidden = p.hidden_size();
    const std::size_t T = caches.size();
    LstmGrads grads = zero_lstm_grads(p);
    std::vector<Vector> input_grads(T);

    const LstmState zeros = zero_state(hidden);
    const LstmState& initial = init ? *init : zeros;

    Vector dh_next(hidden, 0.0);  // dLoss/dh_t carried from step t+1
    Vector dc_next(hidden, 0.0);  // dLoss/dc_t carried from step t+1
    Vector da_i(hidden), da_f(hidden), da_g(hidden), da_o(hidden);

    for (std::size_t ti = T; ti-- > 0;) {
        const GateCache& cc = caches[ti];
        const Vector& h_prev = (ti == 0) ? initial.h : caches[ti - 1].h;
        const Vector& c_prev = (ti == 0) ? initial.c : caches[ti - 1].c;

        for (std::size_t k = 0; k < hidden; ++k) {
            const double dh = upstream[ti][k] + dh_next[k];
            const double tc = tanh_act(cc.c[k]);
            const double dc = dc_next[k] + dh * cc.o[k] * (1.0 - tc * tc);

            da_o[k] = dh * tc * cc.o[k] * (1.0 - cc.o[k]);
            da_f[k] = dc * c_prev[k] * cc.f[k] * (1.0 - cc.f[k]);
            da_i[k] = dc * cc.g[k] * cc.i[k] * (1.0 - cc.i[k]);
            da_g[k] = dc * cc.i[k] * (1.0 - cc.g[k] * cc.g[k]);
            dc_next[k] = dc * cc.f[k];
        }

        outer_add(grads.W_ii, da_i, cc.x);
        outer_add(grads.W_if, da_f, cc.x);
        outer_add(grads.W_ig, da_g, cc.x);
        outer_add(grads.W_io, da_o, cc.x);
        outer_add(grads.W_hi, da_i, h_prev);
        outer_add(grads.W_hf, da_f, h_prev);
        outer_add(grads.W_hg, da_g, h_prev);
        outer_add(grads.W_ho, da_o, h_prev);
        add_into(grads.b_ii, da_i);
        add_into(grads.b_if, da_f);
        add_into(grads.b_ig, da_g);
        add_into(grads.b_io, da_o);
        add_into(grads.b_hi, da_i);
        add_into(grads.b_hf, da_f);
        add_into(grads.b_hg, da_g);
        add_into(grads.b_ho, da_o);

        Vector& dx = input_grads[ti];
        dx.assign(p.input_size(), 0.0);
        matvec_transpose_add(p.W_ii, da_i, dx);
        matvec_transpose_add(p.W_if, da_f, dx);
        matvec_transpose_add(p.W_ig, da_g, dx);
        matvec_transpose_add(p.W_io, da_o, dx);

        dh_next.assign(hidden, 0.0);
        matvec_transpose_add(p.W_hi, da_i, dh_next);
        matvec_transpose_add(p.W_hf, da_f, dh_next);
        matvec_transpose_add(p.W_hg, da_g, dh_next);
        matvec_transpose_add(p.W_ho, da_o, dh_next);
    }
    return {std::move(grads), std::move(input_grads)};
}

// Enumerate the 16 tensors of an LstmParams (or LstmGrads) in a fixed order.
// F is called with (name, Matrix&) and (name, Vector&).
template <typename Params, typename F>
void for_each_lstm_tensor(Params& p, const std::string& prefix, F&& fn) {
    fn(prefix + ".W_ii", p.W_ii);
    fn(prefix + ".W_if", p.W_if);
    fn(prefix + ".W_ig", p.W_ig);
    fn(prefix + ".W_io", p.W_io);
    fn(prefix + ".W_hi", p.W_hi);
    fn(prefix + ".W_hf", p.W_hf);
    fn(prefix + ".W_hg", p.W_hg);
    fn(prefix + ".W_ho", p.W_ho);
    fn(prefix + ".b_ii", p.b_ii);
    fn(prefix + ".b_if", p.b_if);
    fn(prefix + ".b_ig", p.b_ig);
    fn(prefix + ".b_io", p.b_io);
    fn(prefix + ".b_hi", p.b_hi);
    fn(prefix + ".b_hf", p.b_hf);
    fn(prefix + ".b_hg", p.b_hg);
    fn(prefix + ".b_ho", p.b_ho);
}

}  // namespace meterae
