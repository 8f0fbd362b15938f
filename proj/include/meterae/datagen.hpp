#pragma once

// Deterministic synthetic smart-meter data with ground-truth anomaly labels.
// Per household and channel: daily sinusoid x weekend factor + Gaussian
// noise, clipped at zero, on an exact 15-minute grid. Anomalies are injected
// at Bernoulli-sampled positions; spikes add a multiple of the channel's
// clean standard deviation, dips multiply by a small factor, level shifts add
// an offset over a short run. Each household draws from its own sub-stream
// so the corpus is reproducible and households are independent.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "meterae/linalg.hpp"
#include "meterae/preprocess.hpp"
#include "meterae/timeutil.hpp"

namespace meterae {

enum class AnomalyType : int { spike = 0, dip = 1, level_shift = 2 };

inline std::string anomaly_type_name(AnomalyType t) {
    switch (t) {
        case AnomalyType::spike: return "spike";
        case AnomalyType::dip: return "dip";
        case AnomalyType::level_shift: return "level_shift";
    }
    throw std::invalid_argument("unknown anomaly type");
}

inline AnomalyType anomaly_type_from_name(const std::string& s) {
    if (s == "spike") return AnomalyType::spike;
    if (s == "dip") return AnomalyType::dip;
    if (s == "level_shift") return AnomalyType::level_shift;
    throw std::invalid_argument("unknown anomaly type: '" + s + "'");
}

struct ChannelProfile {
    double base = 0.5;            // mean level of the daily shape
    double amplitude = 0.3;       // sinusoid amplitude, must stay below base
    double peak_hour = 19.0;      // hour of day where the sinusoid peaks
    double weekend_factor = 1.0;  // multiplier applied on Saturday/Sunday
};

struct GenConfig {
    std::size_t n_households = 20;
    std::size_t n_days = 30;
    std::string start_date = "2021-01-04";  // a Monday
    std::array<ChannelProfile, kNumChannels> profiles = {
        ChannelProfile{0.50, 0.30, 19.0, 1.10},   // electricity
        ChannelProfile{0.20, 0.12, 8.0, 1.20},    // water
        ChannelProfile{0.80, 0.40, 6.0, 1.00},    // heating
        ChannelProfile{0.30, 0.18, 21.0, 1.15},   // hot water
    };
    double noise_std = 0.05;
    double anomaly_rate = 0.0;
    std::set<AnomalyType> anomaly_types = {AnomalyType::spike};
    double spike_min_sigma = 3.0;   // spike magnitudes in channel-std units
    double spike_max_sigma = 6.0;
    double dip_max_factor = 0.3;    // dip multiplies the value by U(0, this)
    double shift_sigma = 1.5;       // level shift offset in channel-std units
    std::size_t shift_min_len = 4;  // steps
    std::size_t shift_max_len = 16;
    std::uint64_t seed = 1;

    std::size_t steps_per_household() const { return n_days * 96; }

    void validate() const {
        if (n_households < 1 || n_days < 1)
            throw std::invalid_argument("generate: need at least 1 household and 1 day");
        if (!(anomaly_rate >= 0.0 && anomaly_rate < 0.5))
            throw std::invalid_argument("generate: anomaly_rate must be in [0, 0.5)");
        if (anomaly_rate > 0.0 && anomaly_types.empty())
            throw std::invalid_argument("generate: anomaly_rate > 0 needs anomaly types");
        if (spike_min_sigma <= 0.0 || spike_max_sigma < spike_min_sigma)
            throw std::invalid_argument("generate: bad spike magnitude range");
        for (const auto& p : profiles)
            if (p.base < p.amplitude)
                throw std::invalid_argument(
                    "generate: profile base must be >= amplitude to keep values positive");
    }
};

struct GroundTruthEntry {
    std::int64_t timestamp = 0;
    std::string household;
    Channel channel = Channel::electricity;
    AnomalyType type = AnomalyType::spike;
    double magnitude = 0.0;
};

struct LabeledDataset {
    std::vector<RawReading> records;  // canonical order: household, channel, time
    std::vector<GroundTruthEntry> truth;
};

inline std::string household_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "H%03zu", index + 1);
    return buf;
}

inline LabeledDataset generate(const GenConfig& cfg) {
    cfg.validate();
    const std::int64_t start_ts = parse_iso8601(cfg.start_date);
    if (start_ts % kStepSeconds != 0)
        throw std::invalid_argument("generate: start_date must align to the 15-minute grid");
    const std::size_t steps = cfg.steps_per_household();
    Rng base(cfg.seed);

    LabeledDataset ds;
    ds.records.reserve(cfg.n_households * kNumChannels * steps);

    for (std::size_t h = 0; h < cfg.n_households; ++h) {
        Rng hh_rng = base.fork(h + 1);
        const std::string name = household_name(h);
        // Small per-household variation so households differ but share shape.
        const double house_scale = hh_rng.uniform(0.85, 1.15);
        const double house_phase = hh_rng.uniform(-0.75, 0.75);  // hours

        for (std::size_t c = 0; c < kNumChannels; ++c) {
            Rng ch_rng = hh_rng.fork(100 + c);
            const ChannelProfile& prof = cfg.profiles[c];

            Vector clean(steps);
            for (std::size_t t = 0; t < steps; ++t) {
                const std::int64_t ts = start_ts + static_cast<std::int64_t>(t) * kStepSeconds;
                const double hour =
                    static_cast<double>(ts % 86400) / 3600.0;
                const double angle =
                    2.0 * M_PI * (hour - (prof.peak_hour + house_phase)) / 24.0;
                double v = prof.base + prof.amplitude * std::cos(angle);
                if (weekday_from_unix(ts) >= 5) v *= prof.weekend_factor;
                v = house_scale * v + ch_rng.normal(0.0, cfg.noise_std);
                clean[t] = std::max(0.0, v);
            }

            // Channel std of the clean series drives anomaly magnitudes.
            double mean = 0.0;
            for (double v : clean) mean += v;
            mean /= static_cast<double>(steps);
            double var = 0.0;
            for (double v : clean) var += (v - mean) * (v - mean);
            const double sigma = std::sqrt(var / static_cast<double>(steps));

            Vector values = clean;
            if (cfg.anomaly_rate > 0.0) {
                Rng anom_rng = hh_rng.fork(200 + c);
                std::vector<AnomalyType> types(cfg.anomaly_types.begin(),
                                               cfg.anomaly_types.end());
                std::size_t shift_remaining = 0;
                double shift_offset = 0.0;
                for (std::size_t t = 0; t < steps; ++t) {
                    const std::int64_t ts =
                        start_ts + static_cast<std::int64_t>(t) * kStepSeconds;
                    if (shift_remaining > 0) {
                        values[t] = std::max(0.0, values[t] + shift_offset);
                        ds.truth.push_back({ts, name, static_cast<Channel>(c),
                                            AnomalyType::level_shift, shift_offset});
                        --shift_remaining;
                        continue;
                    }
                    if (!anom_rng.bernoulli(cfg.anomaly_rate)) continue;
                    const AnomalyType type =
                        types[static_cast<std::size_t>(anom_rng.below(types.size()))];
                    if (type == AnomalyType::spike) {
                        const double k =
                            anom_rng.uniform(cfg.spike_min_sigma, cfg.spike_max_sigma);
                        values[t] += k * sigma;
                        ds.truth.push_back({ts, name, static_cast<Channel>(c),
                                            AnomalyType::spike, k});
                    } else if (type == AnomalyType::dip) {
                        const double f = anom_rng.uniform(0.0, cfg.dip_max_factor);
                        values[t] *= f;
                        ds.truth.push_back({ts, name, static_cast<Channel>(c),
                                            AnomalyType::dip, f});
                    } else {
                        shift_offset = cfg.shift_sigma * sigma;
                        shift_remaining =
                            cfg.shift_min_len +
                            static_cast<std::size_t>(anom_rng.below(
                                cfg.shift_max_len - cfg.shift_min_len + 1)) -
                            1;
                        values[t] = std::max(0.0, values[t] + shift_offset);
                        ds.truth.push_back({ts, name, static_cast<Channel>(c),
                                            AnomalyType::level_shift, shift_offset});
                    }
                }
            }

            for (std::size_t t = 0; t < steps; ++t) {
                RawReading r;
                r.timestamp = start_ts + static_cast<std::int64_t>(t) * kStepSeconds;
                r.household = name;
                r.channel = static_cast<Channel>(c);
                r.value = values[t];
                r.tag = 0;
                ds.records.push_back(std::move(r));
            }
        }
    }
    return ds;
}

}  // namespace meterae
