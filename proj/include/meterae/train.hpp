#pragma once

// Mini-batch training loop: shuffled 80/20 split, Adam with bias correction,
// global-norm gradient clipping, inverted dropout on the encoder's latent
// output, per-epoch train/validation loss reporting. Deterministic given the
// config seed: shuffling and dropout draw from per-epoch sub-streams and
// gradients reduce in a fixed order.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "meterae/autoencoder.hpp"
#include "meterae/linalg.hpp"

namespace meterae {

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double dropout_rate = 0.1;
    double clip_norm = 5.0;
    double train_fraction = 0.8;
    std::uint64_t seed = 1;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw std::invalid_argument("train: train_fraction must be in (0,1)");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw std::invalid_argument("train: dropout_rate must be in [0,1)");
        if (!(clip_norm > 0.0))
            throw std::invalid_argument("train: clip_norm must be > 0");
    }
};

// First/second moment accumulators, one flat buffer per parameter tensor.
struct AdamState {
    std::vector<Vector> m;
    std::vector<Vector> v;
    std::uint64_t step = 0;
};

struct TrainReport {
    std::vector<double> train_loss;     // one entry per epoch
    std::vector<double> val_loss;       // one entry per epoch
    std::vector<double> epoch_seconds;  // wall time, not part of any file format
};

namespace detail {

template <typename Model>
std::vector<std::span<double>> flatten_tensors(Model& m) {
    std::vector<std::span<double>> spans;
    for_each_model_tensor(m, [&](const std::string&, auto& tensor) {
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Matrix>)
            spans.emplace_back(tensor.data);
        else
            spans.emplace_back(tensor);
    });
    return spans;
}

template <typename Model>
std::vector<std::span<const double>> flatten_tensors_const(const Model& m) {
    std::vector<std::span<const double>> spans;
    for_each_model_tensor(m, [&](const std::string&, const auto& tensor) {
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Matrix>)
            spans.emplace_back(tensor.data);
        else
            spans.emplace_back(tensor);
    });
    return spans;
}

}  // namespace detail

inline AdamState make_adam_state(const AutoencoderModel& model) {
    AdamState s;
    for (auto span : detail::flatten_tensors_const(model)) {
        s.m.emplace_back(span.size(), 0.0);
        s.v.emplace_back(span.size(), 0.0);
    }
    return s;
}

inline void accumulate_grads(ModelGrads& acc, const ModelGrads& g) {
    auto a = detail::flatten_tensors(acc);
    auto b = detail::flatten_tensors_const(g);
    if (a.size() != b.size()) throw_dim("accumulate_grads: tensor count differs");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) throw_dim("accumulate_grads: tensor shape differs");
        for (std::size_t k = 0; k < a[i].size(); ++k) a[i][k] += b[i][k];
    }
}

inline void scale_grads(ModelGrads& g, double factor) {
    for (auto span : detail::flatten_tensors(g))
        for (double& x : span) x *= factor;
}

inline double grad_norm(const ModelGrads& g) {
    double sq = 0.0;
    for (auto span : detail::flatten_tensors_const(g))
        for (double x : span) sq += x * x;
    return std::sqrt(sq);
}

// Global-norm clipping: if the L2 norm over all gradients exceeds max_norm,
// scale everything by max_norm/norm. Returns the pre-clip norm.
inline double clip_gradients(ModelGrads& g, double max_norm) {
    if (!(max_norm > 0.0)) throw std::invalid_argument("clip_gradients: max_norm must be > 0");
    const double norm = grad_norm(g);
    if (norm > max_norm) scale_grads(g, max_norm / norm);
    return norm;
}

// Standard Adam update with bias correction; increments the step counter.
inline void adam_step(AutoencoderModel& model, const ModelGrads& grads, AdamState& state,
                      const TrainConfig& cfg) {
    auto params = detail::flatten_tensors(model);
    auto gs = detail::flatten_tensors_const(grads);
    if (params.size() != gs.size() || params.size() != state.m.size())
        throw_dim("adam_step: tensor count differs between params, grads and state");

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != gs[i].size() || params[i].size() != state.m[i].size())
            throw_dim("adam_step: tensor shape differs at index " + std::to_string(i));
        Vector& m = state.m[i];
        Vector& v = state.v[i];
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            const double g = gs[i][k];
            m[k] = cfg.adam_beta1 * m[k] + (1.0 - cfg.adam_beta1) * g;
            v[k] = cfg.adam_beta2 * v[k] + (1.0 - cfg.adam_beta2) * g * g;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            params[i][k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
        }
    }
}

// In training mode, zero each element with probability `rate` and scale the
// survivors by 1/(1-rate); in inference mode, identity.
inline Vector apply_dropout(const Vector& h, double rate, Rng& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw std::invalid_argument("apply_dropout: rate must be in [0,1)");
    if (!training || rate == 0.0) return h;
    Vector out(h.size());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t k = 0; k < h.size(); ++k)
        out[k] = rng.bernoulli(rate) ? 0.0 : h[k] * keep_scale;
    return out;
}

inline Vector make_dropout_mask(std::size_t width, double rate, Rng& rng) {
    Vector mask(width);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t k = 0; k < width; ++k)
        mask[k] = rng.bernoulli(rate) ? 0.0 : keep_scale;
    return mask;
}

// Deterministic shuffled split: ceil(n * fraction) windows go to training,
// the remainder to validation.
inline std::pair<std::vector<Window>, std::vector<Window>> split_dataset(
    const std::vector<Window>& windows, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("split_dataset: fraction must be in (0,1)");
    if (windows.size() < 2)
        throw std::invalid_argument("split_dataset: need at least 2 windows");

    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const auto train_count = static_cast<std::size_t>(
        std::ceil(static_cast<double>(windows.size()) * fraction));
    std::pair<std::vector<Window>, std::vector<Window>> out;
    out.first.reserve(train_count);
    out.second.reserve(windows.size() - train_count);
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < train_count ? out.first : out.second).push_back(windows[order[i]]);
    return out;
}

inline double mean_loss(const AutoencoderModel& model, const std::vector<Window>& ws) {
    double total = 0.0;
    for (const auto& w : ws) total += mse_loss(w, reconstruct(model, w));
    return total / static_cast<double>(ws.size());
}

// Full training loop. Mutates the model in place and returns per-epoch losses.
// Throws on non-finite loss, naming the epoch and batch.
inline TrainReport train(AutoencoderModel& model, const std::vector<Window>& windows,
                         const TrainConfig& cfg) {
    cfg.validate();
    if (windows.empty()) throw std::invalid_argument("train: no windows");

    std::vector<Window> train_set, val_set;
    if (windows.size() >= 2) {
        auto split = split_dataset(windows, cfg.train_fraction, cfg.seed);
        train_set = std::move(split.first);
        val_set = std::move(split.second);
    } else {
        train_set = windows;
    }
    // With nothing left over for validation, validate on the training set.
    const std::vector<Window>& val_ref = val_set.empty() ? train_set : val_set;

    AdamState adam = make_adam_state(model);
    TrainReport report;
    report.train_loss.reserve(cfg.epochs);
    report.val_loss.reserve(cfg.epochs);

    Rng base(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng shuffle_rng = base.fork(2 * epoch);
        Rng dropout_rng = base.fork(2 * epoch + 1);
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            ModelGrads batch_grads = zero_model_grads(model);
            for (std::size_t i = start; i < end; ++i) {
                const Window& w = train_set[order[i]];
                double loss;
                ModelGrads g;
                if (cfg.dropout_rate > 0.0) {
                    Vector mask = make_dropout_mask(model.arch.latent_width(),
                                                    cfg.dropout_rate, dropout_rng);
                    auto lg = loss_backward_masked(model, w, mask);
                    loss = lg.first;
                    g = std::move(lg.second);
                } else {
                    auto trace = detail::forward_trace(model, w, nullptr);
                    loss = trace.loss;
                    g = detail::backward_trace(model, w, trace, nullptr);
                }
                if (!std::isfinite(loss))
                    throw std::runtime_error(
                        "training diverged at epoch " + std::to_string(epoch + 1) +
                        ", batch " + std::to_string(batch_index + 1) +
                        ": loss=" + std::to_string(loss));
                epoch_loss += loss;
                ++seen;
                accumulate_grads(batch_grads, g);
            }
            scale_grads(batch_grads, 1.0 / static_cast<double>(end - start));
            clip_gradients(batch_grads, cfg.clip_norm);
            adam_step(model, batch_grads, adam, cfg);
        }

        report.train_loss.push_back(epoch_loss / static_cast<double>(seen));
        report.val_loss.push_back(mean_loss(model, val_ref));
        const auto t1 = std::chrono::steady_clock::now();
        report.epoch_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        if (!std::isfinite(report.val_loss.back()))
            throw std::runtime_error("training diverged at epoch " + std::to_string(epoch + 1) +
                                     ": validation loss is not finite");
    }
    return report;
}

}  // namespace meterae
