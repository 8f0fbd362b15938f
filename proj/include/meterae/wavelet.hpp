#pragma once

// Haar DWT denoising with soft universal thresholding.
//
// The transform is stored in unnormalized lifting form (s = a+b, d = a-b;
// the inverse halves are exact), so a constant signal passes through
// denoising bit for bit. When a level has odd length the trailing element is
// set aside as-is and restored on inversion, never paired across scales.
// Coefficients at level l (1-based, level 1 finest) relate to the orthonormal
// Haar basis by a factor 2^(l/2); thresholding and the energy identity are
// computed in orthonormal scale.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meterae/linalg.hpp"

namespace meterae {

struct HaarCoeffs {
    Vector approx;                               // coarsest approximation
    std::vector<Vector> details;                 // details[l-1] holds level l, finest first
    std::vector<std::optional<double>> carries;  // odd tail of each level's input, if any
    std::size_t input_length = 0;
};

struct ThresholdRule {
    enum class Kind { universal, fixed };
    Kind kind = Kind::universal;
    double value = 0.0;  // lambda for Kind::fixed

    static ThresholdRule universal() { return {Kind::universal, 0.0}; }
    static ThresholdRule fixed(double lambda) { return {Kind::fixed, lambda}; }
};

inline HaarCoeffs haar_forward(const Vector& series, std::size_t levels) {
    if (levels > 0 && series.size() < (std::size_t{1} << levels))
        throw std::invalid_argument("haar_forward: series length " +
                                    std::to_string(series.size()) +
                                    " is shorter than 2^levels");
    HaarCoeffs out;
    out.input_length = series.size();
    Vector current = series;
    for (std::size_t level = 0; level < levels; ++level) {
        const std::size_t pairs = current.size() / 2;
        Vector approx(pairs);
        Vector detail(pairs);
        for (std::size_t j = 0; j < pairs; ++j) {
            approx[j] = current[2 * j] + current[2 * j + 1];
            detail[j] = current[2 * j] - current[2 * j + 1];
        }
        out.carries.emplace_back(current.size() % 2 == 1
                                     ? std::optional<double>(current.back())
                                     : std::nullopt);
        out.details.push_back(std::move(detail));
        current = std::move(approx);
    }
    out.approx = std::move(current);
    return out;
}

inline Vector haar_inverse(const HaarCoeffs& coeffs) {
    Vector current = coeffs.approx;
    for (std::size_t level = coeffs.details.size(); level-- > 0;) {
        const Vector& detail = coeffs.details[level];
        const std::size_t pairs = detail.size();
        Vector expanded(pairs * 2);
        for (std::size_t j = 0; j < pairs; ++j) {
            expanded[2 * j] = (current[j] + detail[j]) / 2.0;
            expanded[2 * j + 1] = (current[j] - detail[j]) / 2.0;
        }
        if (coeffs.carries[level]) expanded.push_back(*coeffs.carries[level]);
        current = std::move(expanded);
    }
    return current;
}

// Sum of squared orthonormal-basis coefficients; equals the signal energy.
inline double orthonormal_energy(const HaarCoeffs& coeffs) {
    double total = 0.0;
    for (std::size_t level = 0; level < coeffs.details.size(); ++level) {
        const double scale = std::pow(2.0, -0.5 * static_cast<double>(level + 1));
        for (double d : coeffs.details[level]) {
            const double v = d * scale;
            total += v * v;
        }
        if (coeffs.carries[level]) {
            // The carry is an element of this level's input, one scale coarser
            // than the level's own output coefficients.
            const double v = *coeffs.carries[level] *
                             std::pow(2.0, -0.5 * static_cast<double>(level));
            total += v * v;
        }
    }
    const double ascale =
        std::pow(2.0, -0.5 * static_cast<double>(coeffs.details.size()));
    for (double a : coeffs.approx) {
        const double v = a * ascale;
        total += v * v;
    }
    return total;
}

namespace detail {

inline double median_abs(const Vector& v) {
    if (v.empty()) return 0.0;
    Vector abs(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) abs[i] = std::fabs(v[i]);
    std::sort(abs.begin(), abs.end());
    const std::size_t mid = abs.size() / 2;
    return abs.size() % 2 == 1 ? abs[mid] : 0.5 * (abs[mid - 1] + abs[mid]);
}

}  // namespace detail

// Forward transform, soft-threshold all detail levels, inverse transform.
// Universal rule: lambda = sigma_hat * sqrt(2 ln N) with sigma_hat estimated
// as median(|finest details|)/0.6745 in orthonormal scale.
inline Vector dwt_denoise(const Vector& series, std::size_t levels,
                          const ThresholdRule& rule = ThresholdRule::universal()) {
    if (levels == 0) return series;
    if (series.size() < (std::size_t{1} << levels))
        throw std::invalid_argument("dwt_denoise: series length " +
                                    std::to_string(series.size()) +
                                    " is shorter than 2^levels");
    HaarCoeffs coeffs = haar_forward(series, levels);

    double lambda = rule.value;
    if (rule.kind == ThresholdRule::Kind::universal) {
        const double sigma_hat =
            detail::median_abs(coeffs.details[0]) / std::sqrt(2.0) / 0.6745;
        lambda = sigma_hat * std::sqrt(2.0 * std::log(static_cast<double>(series.size())));
    }

    // Soft-threshold in orthonormal scale without rescaling the stored
    // coefficients: shrinking |d| by lambda*2^(l/2) is the same operation.
    for (std::size_t level = 0; level < coeffs.details.size(); ++level) {
        const double level_lambda =
            lambda * std::pow(2.0, 0.5 * static_cast<double>(level + 1));
        for (double& d : coeffs.details[level]) {
            const double mag = std::fabs(d) - level_lambda;
            d = mag > 0.0 ? (d > 0.0 ? mag : -mag) : 0.0;
        }
    }
    return haar_inverse(coeffs);
}

}  // namespace meterae
