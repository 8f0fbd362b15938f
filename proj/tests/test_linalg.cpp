#include <catch_amalgamated.hpp>

#include <cmath>

#include "meterae/linalg.hpp"

using namespace meterae;

TEST_CASE("sigmoid fixed points and symmetry") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK_THAT(sigmoid(2.0), Catch::Matchers::WithinAbs(0.8807970779778823, 1e-15));
    for (double x : {-7.3, -1.0, 0.25, 3.5, 40.0})
        CHECK_THAT(sigmoid(-x), Catch::Matchers::WithinAbs(1.0 - sigmoid(x), 1e-15));
    CHECK(sigmoid(1e6) > 0.0);
    CHECK(sigmoid(1e6) <= 1.0);
    CHECK(std::isfinite(sigmoid(-1e6)));
}

TEST_CASE("tanh_act oddness and reference value") {
    CHECK(tanh_act(0.0) == 0.0);
    CHECK_THAT(tanh_act(1.0), Catch::Matchers::WithinAbs(0.7615941559557649, 1e-15));
    for (double x : {-4.0, -0.5, 0.125, 2.0})
        CHECK(tanh_act(-x) == -tanh_act(x));
}

TEST_CASE("activation derivatives match finite differences") {
    const double h = 1e-6;
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        const double num_sig = (sigmoid(x + h) - sigmoid(x - h)) / (2 * h);
        const double ana_sig = sigmoid(x) * (1.0 - sigmoid(x));
        CHECK_THAT(num_sig, Catch::Matchers::WithinRel(ana_sig, 1e-6));

        const double num_tanh = (tanh_act(x + h) - tanh_act(x - h)) / (2 * h);
        const double ana_tanh = 1.0 - tanh_act(x) * tanh_act(x);
        CHECK_THAT(num_tanh,
                   Catch::Matchers::WithinRel(ana_tanh, 1e-6) ||
                       Catch::Matchers::WithinAbs(ana_tanh, 1e-9));
    }
}

TEST_CASE("matvec identity, zero and hand example") {
    Matrix id(3, 3);
    for (int i = 0; i < 3; ++i) id(i, i) = 1.0;
    CHECK(matvec(id, {1.0, 2.0, 3.0}) == Vector{1.0, 2.0, 3.0});

    Matrix zero(2, 3);
    CHECK(matvec(zero, {4.0, 5.0, 6.0}) == Vector{0.0, 0.0});

    Matrix m(2, 2);
    m(0, 0) = 1; m(0, 1) = 2; m(1, 0) = 3; m(1, 1) = 4;
    CHECK(matvec(m, {1.0, 1.0}) == Vector{3.0, 7.0});

    CHECK_THROWS_AS(matvec(m, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("matvec distributes over vector addition") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t r = 1 + trial % 5, c = 1 + (trial * 3) % 6;
        Matrix m = xavier_init(r, c, rng);
        Vector u(c), v(c), sum(c);
        for (std::size_t i = 0; i < c; ++i) {
            u[i] = rng.uniform(-2, 2);
            v[i] = rng.uniform(-2, 2);
            sum[i] = u[i] + v[i];
        }
        Vector lhs = matvec(m, sum);
        Vector mu = matvec(m, u), mv = matvec(m, v);
        for (std::size_t i = 0; i < r; ++i)
            CHECK_THAT(lhs[i], Catch::Matchers::WithinAbs(mu[i] + mv[i], 1e-12));
    }
}

TEST_CASE("hadamard identity, zeros, hand example, mismatch") {
    CHECK(hadamard({1.0, 2.0}, {1.0, 1.0}) == Vector{1.0, 2.0});
    CHECK(hadamard({3.0, -4.0}, {0.0, 0.0}) == Vector{0.0, 0.0});
    CHECK(hadamard({2.0, 3.0}, {4.0, 5.0}) == Vector{8.0, 15.0});
    CHECK_THROWS_AS(hadamard({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("xavier_init determinism, bounds, mean") {
    Rng a(42), b(42);
    Matrix m1 = xavier_init(8, 5, a);
    Matrix m2 = xavier_init(8, 5, b);
    CHECK(m1.data == m2.data);

    const double bound = std::sqrt(6.0 / (8 + 5));
    for (double v : m1.data) {
        CHECK(v >= -bound);
        CHECK(v <= bound);
    }

    Rng c(123);
    Matrix big = xavier_init(1000, 1000, c);
    double mean = 0.0;
    for (double v : big.data) mean += v;
    mean /= static_cast<double>(big.data.size());
    CHECK(std::fabs(mean) < 0.01);

    CHECK_THROWS_AS(xavier_init(0, 3, c), std::invalid_argument);
}

TEST_CASE("rng sub-streams are deterministic and distinct") {
    Rng a(9), b(9);
    CHECK(a.next_u64() == b.next_u64());
    Rng f1 = a.fork(1);
    Rng f1b = b.fork(1);
    Rng f2 = a.fork(2);
    CHECK(f1.next_u64() == f1b.next_u64());
    CHECK(f1.next_u64() != f2.next_u64());
}

TEST_CASE("matvec transpose and outer product agree with direct sums") {
    Rng rng(5);
    Matrix m = xavier_init(3, 4, rng);
    Vector v{0.5, -1.0, 2.0};
    Vector out(4, 0.0);
    matvec_transpose_add(m, v, out);
    for (std::size_t c = 0; c < 4; ++c) {
        double want = 0.0;
        for (std::size_t r = 0; r < 3; ++r) want += m(r, c) * v[r];
        CHECK_THAT(out[c], Catch::Matchers::WithinAbs(want, 1e-14));
    }

    Matrix acc(2, 3);
    outer_add(acc, {2.0, -1.0}, {1.0, 0.5, 3.0});
    CHECK(acc(0, 0) == 2.0);
    CHECK(acc(0, 1) == 1.0);
    CHECK(acc(0, 2) == 6.0);
    CHECK(acc(1, 0) == -1.0);
    CHECK(acc(1, 1) == -0.5);
    CHECK(acc(1, 2) == -3.0);
}
