#pragma once

// Raw meter records -> clean, regular, optionally denoised windows.
// Per household: tag filtering and deduplication, aggregation onto the
// 15-minute grid (sums conserve totals), short-gap interpolation, optional
// Haar denoising, z-score normalization fitted on training data only, and
// sliding-window extraction that never spans a missing bin.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "meterae/autoencoder.hpp"
#include "meterae/linalg.hpp"
#include "meterae/timeutil.hpp"
#include "meterae/wavelet.hpp"

namespace meterae {

enum class Channel : int { electricity = 0, water = 1, heating = 2, hot_water = 3 };

inline constexpr std::size_t kNumChannels = 4;
inline constexpr std::int64_t kStepSeconds = 900;

inline const std::array<std::string, kNumChannels>& channel_names() {
    static const std::array<std::string, kNumChannels> names = {
        "electricity", "water", "heating", "hot_water"};
    return names;
}

inline Channel channel_from_name(const std::string& name) {
    const auto& names = channel_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<Channel>(static_cast<int>(i));
    throw std::invalid_argument("unknown channel: '" + name + "'");
}

struct RawReading {
    std::int64_t timestamp = 0;  // unix seconds
    std::string household;
    Channel channel = Channel::electricity;
    double value = 0.0;
    int tag = 0;
};

struct RejectedRecord {
    std::size_t source_line = 0;  // 0 when the record did not come from a file
    std::string reason;
    std::string content;
};

// One household's four channels on a common 15-minute grid.
struct RegularSeries {
    std::string household;
    std::int64_t start = 0;  // aligned to a 15-minute boundary
    std::array<Vector, kNumChannels> values;
    std::array<std::vector<bool>, kNumChannels> missing;
    std::array<std::vector<bool>, kNumChannels> interpolated;

    std::size_t length() const { return values[0].size(); }
    std::int64_t time_at(std::size_t idx) const {
        return start + static_cast<std::int64_t>(idx) * kStepSeconds;
    }
};

struct NormalizationStats {
    std::array<double, kNumChannels> mean{};
    std::array<double, kNumChannels> stddev{};
};

struct ResamplePolicy {
    std::size_t max_gap_interpolate = 4;  // bins; longer gaps stay missing
};

using ChannelReadings = std::map<std::pair<std::string, Channel>, std::vector<RawReading>>;

// Drop records with tags outside valid_tags (into the rejects report),
// deduplicate exact (timestamp, household, channel) keys keeping the first
// occurrence in input order, and sort each group by timestamp.
inline ChannelReadings clean(const std::vector<RawReading>& records,
                             const std::set<int>& valid_tags,
                             std::vector<RejectedRecord>& rejects) {
    ChannelReadings groups;
    std::set<std::tuple<std::string, Channel, std::int64_t>> seen;
    for (const auto& r : records) {
        if (!valid_tags.count(r.tag)) {
            rejects.push_back({0, "invalid tag " + std::to_string(r.tag),
                               r.household + "," + channel_names()[static_cast<int>(r.channel)] +
                                   "," + format_iso8601(r.timestamp)});
            continue;
        }
        if (!seen.insert({r.household, r.channel, r.timestamp}).second) continue;
        groups[{r.household, r.channel}].push_back(r);
    }
    for (auto& [key, list] : groups)
        std::stable_sort(list.begin(), list.end(),
                         [](const RawReading& a, const RawReading& b) {
                             return a.timestamp < b.timestamp;
                         });
    return groups;
}

namespace detail {

inline std::int64_t floor_to_step(std::int64_t ts) {
    std::int64_t q = ts / kStepSeconds;
    if (ts % kStepSeconds < 0) q -= 1;
    return q * kStepSeconds;
}

// Sum readings into bins over [t0, t0 + nbins*step); bins without readings
// are missing. Readings are assumed time-sorted.
inline void resample_channel(const std::vector<RawReading>& readings, std::int64_t t0,
                             std::size_t nbins, Vector& values,
                             std::vector<bool>& missing) {
    values.assign(nbins, 0.0);
    missing.assign(nbins, true);
    for (const auto& r : readings) {
        const std::int64_t bin = (r.timestamp - t0) / kStepSeconds;
        if (r.timestamp < t0 || bin >= static_cast<std::int64_t>(nbins)) continue;
        const auto b = static_cast<std::size_t>(bin);
        if (missing[b]) {
            missing[b] = false;
            values[b] = r.value;
        } else {
            values[b] += r.value;
        }
    }
}

// Linearly fill runs of <= max_gap missing bins that are bracketed by
// present bins. Leading/trailing gaps stay missing.
inline void interpolate_gaps(Vector& values, std::vector<bool>& missing,
                             std::vector<bool>& interpolated, std::size_t max_gap) {
    const std::size_t n = values.size();
    interpolated.assign(n, false);
    std::size_t i = 0;
    while (i < n) {
        if (!missing[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && missing[j]) ++j;
        const bool bracketed = i > 0 && j < n;
        const std::size_t gap = j - i;
        if (bracketed && gap <= max_gap) {
            const double va = values[i - 1];
            const double vb = values[j];
            for (std::size_t k = i; k < j; ++k) {
                const double frac = static_cast<double>(k - i + 1) /
                                    static_cast<double>(gap + 1);
                values[k] = va + (vb - va) * frac;
                missing[k] = false;
                interpolated[k] = true;
            }
        }
        i = j;
    }
}

}  // namespace detail

// Resample one household's channel groups onto a shared 15-minute grid
// spanning all of its readings.
inline RegularSeries resample_15min(
    const std::string& household,
    const std::array<const std::vector<RawReading>*, kNumChannels>& per_channel,
    const ResamplePolicy& policy = {}) {
    std::int64_t min_ts = 0, max_ts = 0;
    bool any = false;
    for (const auto* list : per_channel) {
        if (!list) continue;
        for (const auto& r : *list) {
            if (!any || r.timestamp < min_ts) min_ts = r.timestamp;
            if (!any || r.timestamp > max_ts) max_ts = r.timestamp;
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("resample_15min: no readings for household '" +
                                          household + "'");
    RegularSeries s;
    s.household = household;
    s.start = detail::floor_to_step(min_ts);
    const std::size_t nbins = static_cast<std::size_t>(
        (detail::floor_to_step(max_ts) - s.start) / kStepSeconds + 1);
    static const std::vector<RawReading> kEmpty;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const auto& list = per_channel[c] ? *per_channel[c] : kEmpty;
        detail::resample_channel(list, s.start, nbins, s.values[c], s.missing[c]);
        detail::interpolate_gaps(s.values[c], s.missing[c], s.interpolated[c],
                                 policy.max_gap_interpolate);
    }
    return s;
}

// Denoise each maximal contiguous present run of every channel in place.
// Runs shorter than 2^levels are left untouched.
inline void denoise_series(RegularSeries& s, std::size_t levels,
                           const ThresholdRule& rule = ThresholdRule::universal()) {
    const std::size_t min_len = std::size_t{1} << levels;
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        std::size_t i = 0;
        const std::size_t n = s.length();
        while (i < n) {
            if (s.missing[c][i]) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < n && !s.missing[c][j]) ++j;
            if (j - i >= min_len) {
                Vector segment(s.values[c].begin() + i, s.values[c].begin() + j);
                Vector out = dwt_denoise(segment, levels, rule);
                std::copy(out.begin(), out.end(), s.values[c].begin() + i);
            }
            i = j;
        }
    }
}

// Per-channel z-score statistics over a set of windows (the training portion).
inline NormalizationStats fit_normalizer(const std::vector<Window>& train_windows) {
    if (train_windows.empty())
        throw std::invalid_argument("fit_normalizer: no training windows");
    NormalizationStats stats;
    std::array<double, kNumChannels> sum{}, sumsq{};
    std::size_t count = 0;
    for (const auto& w : train_windows) {
        for (const auto& row : w.values) {
            if (row.size() != kNumChannels)
                throw_dim("fit_normalizer: window with " + std::to_string(row.size()) +
                          " channels");
            for (std::size_t c = 0; c < kNumChannels; ++c) {
                sum[c] += row[c];
                sumsq[c] += row[c] * row[c];
            }
        }
        count += w.length();
    }
    for (std::size_t c = 0; c < kNumChannels; ++c) {
        const double n = static_cast<double>(count);
        stats.mean[c] = sum[c] / n;
        const double var = std::max(0.0, sumsq[c] / n - stats.mean[c] * stats.mean[c]);
        stats.stddev[c] = std::sqrt(var);
        if (!(stats.stddev[c] > 0.0))
            throw std::invalid_argument("fit_normalizer: degenerate channel '" +
                                        channel_names()[c] + "' has zero variance");
    }
    return stats;
}

inline Window apply_normalizer(const NormalizationStats& stats, const Window& w) {
    Window out = w;
    for (auto& row : out.values)
        for (std::size_t c = 0; c < kNumChannels; ++c)
            row[c] = (row[c] - stats.mean[c]) / stats.stddev[c];
    return out;
}

inline Window invert_normalizer(const NormalizationStats& stats, const Window& w) {
    Window out = w;
    for (auto& row : out.values)
        for (std::size_t c = 0; c < kNumChannels; ++c)
            row[c] = row[c] * stats.stddev[c] + stats.mean[c];
    return out;
}

inline Vector denormalize_row(const NormalizationStats& stats, const Vector& row) {
    Vector out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c)
        out[c] = row[c] * stats.stddev[c] + stats.mean[c];
    return out;
}

// Sliding windows that contain no missing bin in any channel. Each window
// records the absolute timestamp of its first step.
inline std::vector<Window> windowize(const RegularSeries& s, std::size_t window_length,
                                     std::size_t stride) {
    if (window_length < 1 || stride < 1)
        throw std::invalid_argument("windowize: window_length and stride must be >= 1");
    std::vector<Window> out;
    const std::size_t n = s.length();
    if (n < window_length) return out;
    for (std::size_t startv = 0; startv + window_length <= n; startv += stride) {
        bool complete = true;
        for (std::size_t c = 0; c < kNumChannels && complete; ++c)
            for (std::size_t t = startv; t < startv + window_length; ++t)
                if (s.missing[c][t]) {
                    complete = false;
                    break;
                }
        if (!complete) continue;
        Window w;
        w.household = s.household;
        w.origin = s.time_at(startv);
        w.values.resize(window_length, Vector(kNumChannels));
        for (std::size_t t = 0; t < window_length; ++t)
            for (std::size_t c = 0; c < kNumChannels; ++c)
                w.values[t][c] = s.values[c][startv + t];
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace meterae
