#include <catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "meterae/lstm.hpp"

using namespace meterae;

namespace {

std::vector<Vector> random_sequence(std::size_t T, std::size_t width, Rng& rng) {
    std::vector<Vector> xs(T, Vector(width));
    for (auto& x : xs)
        for (auto& v : x) v = rng.uniform(-1.5, 1.5);
    return xs;
}

}  // namespace

TEST_CASE("zero-parameter cell: gates at 0.5, zero states stay zero") {
    LstmParams p = zero_lstm_params(3, 2);
    auto [state, cache] = lstm_cell_forward(p, {1.0, -2.0, 0.5}, zero_state(2));
    for (double v : cache.i) CHECK(v == 0.5);
    for (double v : cache.f) CHECK(v == 0.5);
    for (double v : cache.o) CHECK(v == 0.5);
    for (double v : cache.g) CHECK(v == 0.0);
    for (double v : state.c) CHECK(v == 0.0);
    for (double v : state.h) CHECK(v == 0.0);
}

TEST_CASE("zero-parameter cell with carried cell state") {
    LstmParams p = zero_lstm_params(1, 1);
    LstmState prev{{0.0}, {2.0}};
    auto [state, cache] = lstm_cell_forward(p, {0.7}, prev);
    CHECK_THAT(state.c[0], Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(state.h[0],
               Catch::Matchers::WithinAbs(0.5 * std::tanh(1.0), 1e-15));  // 0.38079707...
}

TEST_CASE("cell forward equals straight-line oracle evaluation") {
    Rng rng(31);
    LstmParams p = make_lstm_params(3, 2, rng);
    for (auto& b : {&p.b_ii, &p.b_if, &p.b_ig, &p.b_io, &p.b_hi, &p.b_hf, &p.b_hg, &p.b_ho})
        for (auto& v : *b) v = rng.uniform(-0.5, 0.5);

    Vector x{0.3, -1.2, 0.8};
    LstmState prev{{0.1, -0.2}, {0.4, 0.9}};
    auto [state, cache] = lstm_cell_forward(p, x, prev);

    Vector oh = prev.h, oc = prev.c;
    oracle::lstm_step(p, x, oh, oc);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK_THAT(state.h[k], Catch::Matchers::WithinAbs(oh[k], 1e-14));
        CHECK_THAT(state.c[k], Catch::Matchers::WithinAbs(oc[k], 1e-14));
    }
}

TEST_CASE("cell rejects mismatched shapes") {
    LstmParams p = zero_lstm_params(3, 2);
    CHECK_THROWS_AS(lstm_cell_forward(p, {1.0}, zero_state(2)), std::invalid_argument);
    CHECK_THROWS_AS(lstm_cell_forward(p, {1.0, 2.0, 3.0}, zero_state(5)),
                    std::invalid_argument);
}

TEST_CASE("sequence forward: length one, prefix property, empty rejection") {
    Rng rng(77);
    LstmParams p = make_lstm_params(2, 3, rng);
    auto xs = random_sequence(6, 2, rng);

    auto [single_state, single_cache] = lstm_cell_forward(p, xs[0], zero_state(3));
    auto [states1, caches1] = lstm_sequence_forward(p, {xs[0]}, zero_state(3));
    CHECK(states1.size() == 1);
    CHECK(states1[0].h == single_state.h);
    CHECK(states1[0].c == single_state.c);

    auto [full, full_caches] = lstm_sequence_forward(p, xs, zero_state(3));
    std::vector<Vector> prefix(xs.begin(), xs.begin() + 4);
    auto [part, part_caches] = lstm_sequence_forward(p, prefix, zero_state(3));
    for (std::size_t t = 0; t < part.size(); ++t) {
        CHECK(full[t].h == part[t].h);
        CHECK(full[t].c == part[t].c);
    }

    CHECK_THROWS_AS(lstm_sequence_forward(p, {}, zero_state(3)), std::invalid_argument);
}

TEST_CASE("gate ranges and cell-state decomposition hold on random runs") {
    Rng rng(313);
    LstmParams p = make_lstm_params(3, 4, rng);
    auto xs = random_sequence(12, 3, rng);
    auto [states, caches] = lstm_sequence_forward(p, xs, zero_state(4));
    Vector prev_c(4, 0.0);
    for (const auto& cache : caches) {
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(cache.i[k] > 0.0);
            CHECK(cache.i[k] < 1.0);
            CHECK(cache.f[k] > 0.0);
            CHECK(cache.f[k] < 1.0);
            CHECK(cache.o[k] > 0.0);
            CHECK(cache.o[k] < 1.0);
            CHECK(cache.g[k] > -1.0);
            CHECK(cache.g[k] < 1.0);
            // Eq-form identity holds bitwise: c_t is exactly f*c_{t-1} + i*g.
            CHECK(cache.c[k] == cache.f[k] * prev_c[k] + cache.i[k] * cache.g[k]);
        }
        prev_c = cache.c;
    }
}

TEST_CASE("bilstm: T=1 concatenation and zero params") {
    Rng rng(99);
    BiLstmParams bp{make_lstm_params(2, 3, rng), make_lstm_params(2, 3, rng)};
    Vector x{0.4, -0.9};
    auto out = bilstm_forward(bp, {x});
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].size() == 6);
    auto [fs, fc] = lstm_cell_forward(bp.forward, x, zero_state(3));
    auto [bs, bc] = lstm_cell_forward(bp.backward, x, zero_state(3));
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(out[0][k] == fs.h[k]);
        CHECK(out[0][3 + k] == bs.h[k]);
    }

    BiLstmParams zp{zero_lstm_params(2, 3), zero_lstm_params(2, 3)};
    auto zout = bilstm_forward(zp, random_sequence(5, 2, rng));
    for (const auto& row : zout) {
        CHECK(row.size() == 6);
        for (double v : row) CHECK(v == 0.0);
    }

    CHECK_THROWS_AS(bilstm_forward(bp, {}), std::invalid_argument);
}

TEST_CASE("bilstm palindrome symmetry with shared parameters") {
    Rng rng(17);
    LstmParams shared = make_lstm_params(2, 3, rng);
    BiLstmParams bp{shared, shared};
    const std::size_t T = 7;
    auto xs = random_sequence(T, 2, rng);
    for (std::size_t t = 0; t < T / 2; ++t) xs[T - 1 - t] = xs[t];  // palindrome

    auto out = bilstm_forward(bp, xs);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < 3; ++k)
            CHECK_THAT(out[t][k], Catch::Matchers::WithinAbs(out[T - 1 - t][3 + k], 1e-14));
}

TEST_CASE("bilstm reversal swaps halves and time order") {
    Rng rng(23);
    BiLstmParams bp{make_lstm_params(2, 3, rng), make_lstm_params(2, 3, rng)};
    auto xs = random_sequence(6, 2, rng);
    auto out = bilstm_forward(bp, xs);

    BiLstmParams swapped{bp.backward, bp.forward};
    std::vector<Vector> reversed(xs.rbegin(), xs.rend());
    auto rout = bilstm_forward(swapped, reversed);

    for (std::size_t t = 0; t < xs.size(); ++t)
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(out[t][k] == rout[xs.size() - 1 - t][3 + k]);
            CHECK(out[t][3 + k] == rout[xs.size() - 1 - t][k]);
        }
}

TEST_CASE("backward: zero upstream gives zero parameter gradients") {
    Rng rng(41);
    LstmParams p = make_lstm_params(2, 3, rng);
    auto xs = random_sequence(5, 2, rng);
    auto [states, caches] = lstm_sequence_forward(p, xs, zero_state(3));
    std::vector<Vector> upstream(5, Vector(3, 0.0));
    auto [grads, input_grads] = lstm_backward(caches, p, upstream);
    for_each_lstm_tensor(grads, "g", [](const std::string&, const auto& tensor) {
        if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Matrix>) {
            for (double v : tensor.data) CHECK(v == 0.0);
        } else {
            for (double v : tensor) CHECK(v == 0.0);
        }
    });
    for (const auto& gi : input_grads)
        for (double v : gi) CHECK(v == 0.0);
}

TEST_CASE("backward of a single-step single-unit cell matches the hand chain rule") {
    // One unit, one input, hand-picked parameters. Loss = h_1.
    LstmParams p = zero_lstm_params(1, 1);
    p.W_ii(0, 0) = 0.6;
    p.W_if(0, 0) = -0.4;
    p.W_ig(0, 0) = 0.9;
    p.W_io(0, 0) = 0.3;
    p.b_ii[0] = 0.1;
    p.b_hf[0] = 0.2;
    const double x = 0.8;

    auto [state, cache] = lstm_cell_forward(p, {x}, zero_state(1));
    auto [grads, input_grads] =
        lstm_backward({cache}, p, std::vector<Vector>{Vector{1.0}});

    // Hand derivation: h = o*tanh(c), c = i*g (prev c = 0, so f drops out).
    const double ai = p.W_ii(0, 0) * x + p.b_ii[0];
    const double ag = p.W_ig(0, 0) * x;
    const double ao = p.W_io(0, 0) * x;
    const double i = 1.0 / (1.0 + std::exp(-ai));
    const double g = std::tanh(ag);
    const double o = 1.0 / (1.0 + std::exp(-ao));
    const double c = i * g;
    const double tc = std::tanh(c);

    const double dh_do = tc;
    const double dh_dc = o * (1.0 - tc * tc);
    const double dW_io = dh_do * o * (1.0 - o) * x;
    const double dW_ii = dh_dc * g * i * (1.0 - i) * x;
    const double dW_ig = dh_dc * i * (1.0 - g * g) * x;

    CHECK_THAT(grads.W_io(0, 0), Catch::Matchers::WithinRel(dW_io, 1e-12));
    CHECK_THAT(grads.W_ii(0, 0), Catch::Matchers::WithinRel(dW_ii, 1e-12));
    CHECK_THAT(grads.W_ig(0, 0), Catch::Matchers::WithinRel(dW_ig, 1e-12));
    // W_if multiplies f, which only touches prev c = 0: no gradient.
    CHECK(grads.W_if(0, 0) == 0.0);
    // Bias pairs receive identical gradients (they enter as a sum).
    CHECK(grads.b_ii[0] == grads.b_hi[0]);
    CHECK(grads.b_ig[0] == grads.b_hg[0]);
}

TEST_CASE("backward matches central finite differences on every tensor") {
    // hidden 3, input 2, T=5, loss = sum of 0.5*||h_t||^2 so upstream = h_t.
    Rng rng(555);
    LstmParams p = make_lstm_params(2, 3, rng);
    auto xs = random_sequence(5, 2, rng);

    auto loss = [&]() {
        auto [states, caches] = lstm_sequence_forward(p, xs, zero_state(3));
        double total = 0.0;
        for (const auto& s : states)
            for (double v : s.h) total += 0.5 * v * v;
        return total;
    };

    auto [states, caches] = lstm_sequence_forward(p, xs, zero_state(3));
    std::vector<Vector> upstream;
    for (const auto& s : states) upstream.push_back(s.h);
    auto [grads, input_grads] = lstm_backward(caches, p, upstream);

    auto check_tensor = [&](auto& param_tensor, auto& grad_tensor) {
        if constexpr (std::is_same_v<std::decay_t<decltype(param_tensor)>, Matrix>) {
            for (std::size_t idx = 0; idx < param_tensor.data.size(); ++idx) {
                const double fd = oracle::central_difference(loss, param_tensor.data[idx]);
                CHECK(oracle::rel_err(grad_tensor.data[idx], fd) < 1e-4);
            }
        } else {
            for (std::size_t idx = 0; idx < param_tensor.size(); ++idx) {
                const double fd = oracle::central_difference(loss, param_tensor[idx]);
                CHECK(oracle::rel_err(grad_tensor[idx], fd) < 1e-4);
            }
        }
    };
    check_tensor(p.W_ii, grads.W_ii);
    check_tensor(p.W_if, grads.W_if);
    check_tensor(p.W_ig, grads.W_ig);
    check_tensor(p.W_io, grads.W_io);
    check_tensor(p.W_hi, grads.W_hi);
    check_tensor(p.W_hf, grads.W_hf);
    check_tensor(p.W_hg, grads.W_hg);
    check_tensor(p.W_ho, grads.W_ho);
    check_tensor(p.b_ii, grads.b_ii);
    check_tensor(p.b_if, grads.b_if);
    check_tensor(p.b_ig, grads.b_ig);
    check_tensor(p.b_io, grads.b_io);
    check_tensor(p.b_hi, grads.b_hi);
    check_tensor(p.b_hf, grads.b_hf);
    check_tensor(p.b_hg, grads.b_hg);
    check_tensor(p.b_ho, grads.b_ho);

    // Input gradients against finite differences too.
    for (std::size_t t = 0; t < xs.size(); ++t)
        for (std::size_t j = 0; j < 2; ++j) {
            const double fd = oracle::central_difference(loss, xs[t][j]);
            CHECK(oracle::rel_err(input_grads[t][j], fd) < 1e-4);
        }

    CHECK_THROWS_AS(lstm_backward(caches, p, std::vector<Vector>(3, Vector(3, 0.0))),
                    std::invalid_argument);
}
