#pragma once

// Per-timestep anomaly scoring and threshold classification.
// The score at step t is the squared Euclidean distance between the observed
// and reconstructed 4-channel vectors, computed in normalized space; a point
// is normal (+1) when its error is <= theta, abnormal (0) otherwise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "meterae/autoencoder.hpp"
#include "meterae/linalg.hpp"
#include "meterae/preprocess.hpp"

namespace meterae {

inline constexpr int kLabelNormal = 1;
inline constexpr int kLabelAbnormal = 0;

struct ThresholdStrategy {
    enum class Kind { manual, quantile, mean_plus_k_std };
    Kind kind = Kind::quantile;
    double theta = 0.0;     // manual
    double quantile = 0.99; // quantile(q)
    double k = 3.0;         // mean + k*std

    static ThresholdStrategy manual(double theta) {
        ThresholdStrategy s;
        s.kind = Kind::manual;
        s.theta = theta;
        return s;
    }
    static ThresholdStrategy by_quantile(double q) {
        ThresholdStrategy s;
        s.kind = Kind::quantile;
        s.quantile = q;
        return s;
    }
    static ThresholdStrategy by_mean_std(double k) {
        ThresholdStrategy s;
        s.kind = Kind::mean_plus_k_std;
        s.k = k;
        return s;
    }
};

struct DetectorConfig {
    ThresholdStrategy strategy;
    std::size_t stride = 0;  // 0 means stride = window_length (non-overlapping)
};

struct AnomalyScore {
    std::int64_t timestamp = 0;
    std::string household;
    double error = 0.0;  // e_t
};

struct ReportEntry {
    AnomalyScore score;
    int label = kLabelNormal;
    Vector input;           // de-normalized observed values, 4 channels
    Vector reconstruction;  // de-normalized reconstructed values, 4 channels
};

struct AnomalyReport {
    std::vector<ReportEntry> entries;  // sorted by error descending
    double theta = 0.0;
    std::string model_id;
};

// e_t = ||x_t - xhat_t||^2
inline double reconstruction_error(const Vector& x_t, const Vector& xhat_t) {
    if (x_t.size() != xhat_t.size())
        throw_dim("reconstruction_error: lengths " + std::to_string(x_t.size()) +
                  " and " + std::to_string(xhat_t.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < x_t.size(); ++i) {
        const double d = x_t[i] - xhat_t[i];
        total += d * d;
    }
    return total;
}

// +1 (normal) when e_t <= theta, 0 (abnormal) when e_t > theta.
inline int classify(double e_t, double theta) {
    return e_t <= theta ? kLabelNormal : kLabelAbnormal;
}

// Empirical quantile with linear interpolation between order statistics.
inline double fit_threshold(std::vector<double> errors, const ThresholdStrategy& strategy) {
    if (strategy.kind == ThresholdStrategy::Kind::manual) return strategy.theta;
    if (errors.empty())
        throw std::invalid_argument(
            "fit_threshold: automatic strategy needs a nonempty error sample");
    if (strategy.kind == ThresholdStrategy::Kind::quantile) {
        const double q = strategy.quantile;
        if (!(q > 0.0 && q < 1.0))
            throw std::invalid_argument("fit_threshold: quantile must be in (0,1)");
        std::sort(errors.begin(), errors.end());
        const double pos = q * static_cast<double>(errors.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, errors.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return errors[lo] + (errors[hi] - errors[lo]) * frac;
    }
    if (!(strategy.k > 0.0))
        throw std::invalid_argument("fit_threshold: k must be > 0");
    double sum = 0.0;
    for (double e : errors) sum += e;
    const double mean = sum / static_cast<double>(errors.size());
    double sq = 0.0;
    for (double e : errors) sq += (e - mean) * (e - mean);
    const double stddev = std::sqrt(sq / static_cast<double>(errors.size()));
    return mean + strategy.k * stddev;
}

// Score every timestep covered by the given windows. Windows are in
// normalized space; `stats` de-normalizes the stored inputs/reconstructions.
// With overlapping windows (stride < window_length at extraction time) the
// e_t of all covering windows are averaged per timestep.
inline AnomalyReport score_series(const AutoencoderModel& model,
                                  const std::vector<Window>& windows,
                                  const NormalizationStats& stats,
                                  const ThresholdStrategy& strategy,
                                  const std::string& model_id = "") {
    struct Accum {
        double error_sum = 0.0;
        Vector input;
        Vector recon_sum;
        std::size_t count = 0;
    };
    std::map<std::pair<std::string, std::int64_t>, Accum> per_step;

    for (const auto& w : windows) {
        const Reconstruction r = reconstruct(model, w);
        for (std::size_t t = 0; t < w.length(); ++t) {
            const double e = reconstruction_error(w.values[t], r.values[t]);
            auto& acc = per_step[{w.household,
                                  w.origin + static_cast<std::int64_t>(t) * kStepSeconds}];
            if (acc.count == 0) {
                acc.input = w.values[t];
                acc.recon_sum = r.values[t];
            } else {
                add_into(acc.recon_sum, r.values[t]);
            }
            acc.error_sum += e;
            acc.count += 1;
        }
    }
    if (per_step.empty())
        throw std::invalid_argument("score_series: no windows to score");

    std::vector<double> errors;
    errors.reserve(per_step.size());
    for (const auto& [key, acc] : per_step)
        errors.push_back(acc.error_sum / static_cast<double>(acc.count));

    AnomalyReport report;
    report.model_id = model_id;
    report.theta = fit_threshold(errors, strategy);
    report.entries.reserve(per_step.size());
    for (const auto& [key, acc] : per_step) {
        ReportEntry entry;
        entry.score.household = key.first;
        entry.score.timestamp = key.second;
        entry.score.error = acc.error_sum / static_cast<double>(acc.count);
        entry.label = classify(entry.score.error, report.theta);
        entry.input = denormalize_row(stats, acc.input);
        Vector recon_mean = acc.recon_sum;
        for (double& v : recon_mean) v /= static_cast<double>(acc.count);
        entry.reconstruction = denormalize_row(stats, recon_mean);
        report.entries.push_back(std::move(entry));
    }
    // Report view: sorted by anomaly score, ties broken deterministically.
    std::sort(report.entries.begin(), report.entries.end(),
              [](const ReportEntry& a, const ReportEntry& b) {
                  if (a.score.error != b.score.error) return a.score.error > b.score.error;
                  if (a.score.household != b.score.household)
                      return a.score.household < b.score.household;
                  return a.score.timestamp < b.score.timestamp;
              });
    return report;
}

}  // namespace meterae
