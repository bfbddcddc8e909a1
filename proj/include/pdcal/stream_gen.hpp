// Copyright 2026 The pdcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Time-stamped photon streams for the two detection arms.
//
// Three source models share one origin process:
//   coherent     Poisson photons at seed_rate, beam 2 only.
//   spontaneous  Poisson pair creations at pair_rate; one photon per beam,
//                beam-2 photon delayed by a twin jitter.
//   stimulated   Poisson seed photons at seed_rate in beam 2. Each seed
//                independently (stim_prob) adds a beam-1 photon and a beam-2
//                twin. The beam-1 photon is linked to both the twin and the
//                seed. An optional spontaneous background at pair_rate is
//                superposed.
//
// Twin jitter is a zero-mean normal with standard deviation tau_coh,
// truncated at +/- kJitterCutoff * tau_coh. In stimulated mode the beam-1
// photon is jittered around its seed and the twin around the beam-1 photon,
// so every link spans at most kJitterCutoff * tau_coh.
//
// Draw order per origin event (one Rng per run, seeded with rng_seed):
//   1. exponential inter-arrival at the total origin rate
//   2. stimulated mode with pair_rate > 0: one uniform selecting seed vs. pair
//   3. seed photon: one bernoulli(stim_prob); if stimulated, two truncated
//      normals (beam-1 offset, then twin offset)
//      spontaneous pair: one truncated normal (twin offset)
// A cluster with any member outside [0, duration) loses its pair photons;
// a stimulating seed photon is kept as an unlinked event.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pdcal/csv.hpp"
#include "pdcal/errors.hpp"
#include "pdcal/rng.hpp"

namespace pdcal {

enum class SourceMode { coherent, spontaneous, stimulated };

inline std::string_view to_string(SourceMode mode) {
    switch (mode) {
        case SourceMode::coherent: return "coherent";
        case SourceMode::spontaneous: return "spontaneous";
        case SourceMode::stimulated: return "stimulated";
    }
    return "unknown";
}

inline SourceMode parse_source_mode(std::string_view text) {
    if (text == "coherent") return SourceMode::coherent;
    if (text == "spontaneous") return SourceMode::spontaneous;
    if (text == "stimulated") return SourceMode::stimulated;
    throw ConfigError("unknown source mode '" + std::string(text) + "'");
}

/// Truncation of the twin-jitter law, in units of tau_coh.
inline constexpr double kJitterCutoff = 10.0;

struct SourceConfig {
    SourceMode mode = SourceMode::stimulated;
    double pair_rate = 0.0;     // pairs/s; background pairs in stimulated mode
    double seed_rate = 1e8;     // photons/s; also the coherent-mode rate
    double stim_prob = 1e-2;    // per seed photon
    double tau_coh = 100e-15;   // s
    double duration = 10e-3;    // s
    std::uint64_t rng_seed = 1;

    void validate() const {
        auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
        if (!finite_nonneg(pair_rate)) throw ConfigError("pair_rate must be finite and >= 0");
        if (!finite_nonneg(seed_rate)) throw ConfigError("seed_rate must be finite and >= 0");
        if (!std::isfinite(stim_prob) || stim_prob < 0.0 || stim_prob > 1.0)
            throw ConfigError("stim_prob must lie in [0, 1]");
        if (!finite_nonneg(tau_coh)) throw ConfigError("tau_coh must be finite and >= 0");
        if (!std::isfinite(duration) || duration <= 0.0)
            throw ConfigError("duration must be finite and > 0");
        if (mode == SourceMode::stimulated && !(seed_rate > 0.0))
            throw ConfigError("stimulated mode requires seed_rate > 0");
    }

    /// Rate of the origin process that drives generation.
    double origin_rate() const {
        switch (mode) {
            case SourceMode::coherent: return seed_rate;
            case SourceMode::spontaneous: return pair_rate;
            case SourceMode::stimulated: return seed_rate + pair_rate;
        }
        return 0.0;
    }
};

struct PairLink {
    std::size_t beam1 = 0;
    std::size_t beam2 = 0;
    auto operator<=>(const PairLink&) const = default;
};

struct PairedEventStream {
    std::vector<double> beam1_times;
    std::vector<double> beam2_times;
    std::vector<PairLink> pair_links;  // sorted by (beam1, beam2)
    double duration = 0.0;

    /// Per-event link id for `beam` (1 or 2): the beam-1 index of the cluster, or -1.
    std::vector<std::int64_t> link_ids(int beam) const {
        std::vector<std::int64_t> ids(beam == 1 ? beam1_times.size() : beam2_times.size(), -1);
        for (const auto& link : pair_links) {
            const auto hub = static_cast<std::int64_t>(link.beam1);
            if (beam == 1) {
                ids[link.beam1] = hub;
            } else {
                ids[link.beam2] = hub;
            }
        }
        return ids;
    }
};

/**
 * Chronological, chunked generator. Each call to next_chunk() emits every
 * cluster whose origin lies in the next `span` seconds. Clusters are never
 * split across chunks; since members sit within 2 * kJitterCutoff * tau_coh of
 * their origin, consecutive chunks overlap in time by at most that guard band.
 * The sequence of random draws does not depend on the chunk spans.
 */
class EventSource {
 public:
    explicit EventSource(const SourceConfig& config) : config_(config), rng_(config.rng_seed) {
        config_.validate();
        rate_ = config_.origin_rate();
        next_origin_ = rate_ > 0.0 ? rng_.exponential(1.0 / rate_)
                                   : std::numeric_limits<double>::infinity();
    }

    bool done() const { return !(next_origin_ < config_.duration); }
    double cursor() const { return cursor_; }
    const SourceConfig& config() const { return config_; }

    PairedEventStream next_chunk(double span) {
        if (!(span > 0.0)) throw ConfigError("chunk span must be > 0");
        const double end = std::min(cursor_ + span, config_.duration);
        std::vector<Event> events1;
        std::vector<Event> events2;
        std::int64_t cluster = 0;
        while (next_origin_ < end) {
            emit_cluster(next_origin_, cluster, events1, events2);
            next_origin_ += rng_.exponential(1.0 / rate_);
        }
        cursor_ = end;
        return assemble(std::move(events1), std::move(events2), cluster);
    }

 private:
    struct Event {
        double time;
        std::int64_t cluster;  // -1 when unlinked
    };

    bool inside(double t) const { return t >= 0.0 && t < config_.duration; }

    double jitter() { return rng_.truncated_normal(config_.tau_coh, kJitterCutoff); }

    void emit_cluster(double origin, std::int64_t& cluster, std::vector<Event>& b1,
                      std::vector<Event>& b2) {
        bool is_seed = config_.mode != SourceMode::spontaneous;
        if (config_.mode == SourceMode::stimulated && config_.pair_rate > 0.0)
            is_seed = rng_.uniform() < config_.seed_rate / rate_;

        if (config_.mode == SourceMode::coherent) {
            b2.push_back({origin, -1});
            return;
        }
        if (is_seed) {
            if (!rng_.bernoulli(config_.stim_prob)) {
                b2.push_back({origin, -1});
                return;
            }
            const double t1 = origin + jitter();
            const double twin = t1 + jitter();
            if (inside(t1) && inside(twin)) {
                b1.push_back({t1, cluster});
                b2.push_back({twin, cluster});
                b2.push_back({origin, cluster});
                ++cluster;
            } else {
                b2.push_back({origin, -1});
            }
            return;
        }
        const double t2 = origin + jitter();
        if (inside(t2)) {
            b1.push_back({origin, cluster});
            b2.push_back({t2, cluster});
            ++cluster;
        }
    }

    // Events arrive nearly sorted (displacements bounded by the jitter
    // support), so insertion sort is linear in practice.
    static void sort_nearly_sorted(std::vector<Event>& events) {
        for (std::size_t i = 1; i < events.size(); ++i) {
            if (!(events[i].time < events[i - 1].time)) continue;
            const Event moving = events[i];
            std::size_t j = i;
            while (j > 0 && moving.time < events[j - 1].time) {
                events[j] = events[j - 1];
                --j;
            }
            events[j] = moving;
        }
        // Coincident times only occur for tau_coh == 0; separate them by one ulp.
        for (std::size_t i = 1; i < events.size(); ++i) {
            if (events[i].time <= events[i - 1].time)
                events[i].time = std::nextafter(events[i - 1].time,
                                                std::numeric_limits<double>::infinity());
        }
    }

    PairedEventStream assemble(std::vector<Event> b1, std::vector<Event> b2,
                               std::int64_t n_clusters) const {
        sort_nearly_sorted(b1);
        sort_nearly_sorted(b2);
        PairedEventStream out;
        out.duration = config_.duration;
        out.beam1_times.reserve(b1.size());
        out.beam2_times.reserve(b2.size());
        std::vector<std::size_t> hub(static_cast<std::size_t>(n_clusters));
        for (std::size_t i = 0; i < b1.size(); ++i) {
            out.beam1_times.push_back(b1[i].time);
            hub[static_cast<std::size_t>(b1[i].cluster)] = i;
        }
        for (std::size_t i = 0; i < b2.size(); ++i) {
            out.beam2_times.push_back(b2[i].time);
            if (b2[i].cluster >= 0)
                out.pair_links.push_back({hub[static_cast<std::size_t>(b2[i].cluster)], i});
        }
        std::sort(out.pair_links.begin(), out.pair_links.end());
        return out;
    }

    SourceConfig config_;
    Rng rng_;
    double rate_ = 0.0;
    double next_origin_ = 0.0;
    double cursor_ = 0.0;
};

/// Whole-run stream for any mode.
inline PairedEventStream generate(const SourceConfig& config) {
    EventSource source(config);
    return source.next_chunk(config.duration);
}

inline PairedEventStream gen_coherent(double rate, double duration, std::uint64_t rng_seed) {
    SourceConfig config;
    config.mode = SourceMode::coherent;
    config.seed_rate = rate;
    config.pair_rate = 0.0;
    config.duration = duration;
    config.rng_seed = rng_seed;
    return generate(config);
}

inline PairedEventStream gen_spontaneous(const SourceConfig& config) {
    if (config.mode != SourceMode::spontaneous)
        throw ConfigError("gen_spontaneous requires mode = spontaneous");
    return generate(config);
}

inline PairedEventStream gen_stimulated(const SourceConfig& config) {
    if (config.mode != SourceMode::stimulated)
        throw ConfigError("gen_stimulated requires mode = stimulated");
    return generate(config);
}

/// Checks ordering, bounds, link validity and jitter support. Returns an empty
/// string when the stream is well formed, otherwise a description of the first
/// violation.
inline std::string check_stream(const PairedEventStream& stream, double tau_coh,
                                std::size_t max_links_per_beam1) {
    for (int beam = 1; beam <= 2; ++beam) {
        const auto& times = beam == 1 ? stream.beam1_times : stream.beam2_times;
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] >= 0.0 && times[i] < stream.duration))
                return "beam " + std::to_string(beam) + " time out of range";
            if (i > 0 && !(times[i] > times[i - 1]))
                return "beam " + std::to_string(beam) + " not strictly sorted";
        }
    }
    std::vector<std::size_t> uses(stream.beam1_times.size(), 0);
    for (const auto& link : stream.pair_links) {
        if (link.beam1 >= stream.beam1_times.size() || link.beam2 >= stream.beam2_times.size())
            return "link index out of range";
        if (++uses[link.beam1] > max_links_per_beam1) return "beam-1 event linked too often";
        const double t1 = stream.beam1_times[link.beam1];
        const double t2 = stream.beam2_times[link.beam2];
        const double hi = std::max(t1, t2);
        const double ulp = std::nextafter(hi, std::numeric_limits<double>::infinity()) - hi;
        if (std::abs(t1 - t2) > kJitterCutoff * tau_coh + 4.0 * ulp)
            return "linked pair exceeds jitter support";
    }
    return {};
}

/// CSV dump: beam,time_s,link_id (link_id = beam-1 index of the cluster, -1 if unlinked).
inline void write_events_csv(std::ostream& out, const PairedEventStream& stream) {
    out << "beam,time_s,link_id\n";
    for (int beam = 1; beam <= 2; ++beam) {
        const auto& times = beam == 1 ? stream.beam1_times : stream.beam2_times;
        const auto ids = stream.link_ids(beam);
        for (std::size_t i = 0; i < times.size(); ++i)
            out << beam << ',' << csv::num(times[i]) << ',' << ids[i] << '\n';
    }
}

}  // namespace pdcal
