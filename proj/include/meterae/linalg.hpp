#pragma once

// Minimal dense linear algebra for small recurrent networks.
// Row-major double storage throughout; every randomized routine takes an
// explicit seeded generator so results are reproducible bit for bit.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace meterae {

using Vector = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows*cols entries

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

[[noreturn]] inline void throw_dim(const std::string& what) {
    throw std::invalid_argument("dimension mismatch: " + what);
}

inline double sigmoid(double x) {
    // Split on sign so exp() never overflows.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double tanh_act(double x) { return std::tanh(x); }

// y = M v
inline void matvec_into(const Matrix& m, const Vector& v, Vector& out) {
    if (m.cols != v.size())
        throw_dim("matvec: matrix is " + std::to_string(m.rows) + "x" +
                  std::to_string(m.cols) + ", vector has length " +
                  std::to_string(v.size()));
    out.assign(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
}

inline Vector matvec(const Matrix& m, const Vector& v) {
    Vector out;
    matvec_into(m, v, out);
    return out;
}

// out += M^T v  (accumulating form used by reverse-mode passes)
inline void matvec_transpose_add(const Matrix& m, const Vector& v, Vector& out) {
    if (m.rows != v.size())
        throw_dim("matvec_transpose: matrix is " + std::to_string(m.rows) + "x" +
                  std::to_string(m.cols) + ", vector has length " +
                  std::to_string(v.size()));
    if (out.size() != m.cols) out.assign(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        const double s = v[r];
        if (s == 0.0) continue;
        for (std::size_t c = 0; c < m.cols; ++c) out[c] += s * row[c];
    }
}

// M += a b^T
inline void outer_add(Matrix& m, const Vector& a, const Vector& b) {
    if (m.rows != a.size() || m.cols != b.size())
        throw_dim("outer_add: matrix is " + std::to_string(m.rows) + "x" +
                  std::to_string(m.cols) + ", outer product is " +
                  std::to_string(a.size()) + "x" + std::to_string(b.size()));
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.row(r);
        const double s = a[r];
        if (s == 0.0) continue;
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += s * b[c];
    }
}

inline Vector hadamard(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw_dim("hadamard: lengths " + std::to_string(a.size()) + " and " +
                  std::to_string(b.size()));
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

inline void add_into(Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw_dim("add: lengths " + std::to_string(a.size()) + " and " +
                  std::to_string(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

// Deterministic random source. std::mt19937_64 has a portable, standardized
// output stream; the double mappings below avoid std::*_distribution, whose
// algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), mt_(split_mix(seed)) {}

    std::uint64_t next_u64() { return mt_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(mt_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Box-Muller; deterministic and portable, unlike std::normal_distribution.
    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = next_unit();
        const double u2 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return mean + stddev * r * std::cos(t);
    }

    bool bernoulli(double p) { return next_unit() < p; }

    // Uniform integer in [0, n). Modulo bias is negligible for the n used here.
    std::uint64_t below(std::uint64_t n) { return mt_() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive an independent sub-stream, e.g. one per household or epoch.
    Rng fork(std::uint64_t stream_id) const {
        return Rng(seed_ ^ split_mix(stream_id ^ 0x9e3779b97f4a7c15ULL));
    }

    static std::uint64_t split_mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 mt_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Uniform Xavier/Glorot initialization, bounds +-sqrt(6/(rows+cols)).
inline Matrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("xavier_init: rows and cols must be >= 1");
    Matrix m(rows, cols);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (auto& v : m.data) v = rng.uniform(-bound, bound);
    return m;
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace meterae
