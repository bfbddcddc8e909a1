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

// Analog photodetector: Bernoulli thinning by the quantum efficiency, a charge
// per retained event, and a sampled pulse-train current
//   i(t_k) = sum_n q_n f(t_k - t_n),   t_k = t0 + k dt.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdcal/csv.hpp"
#include "pdcal/errors.hpp"
#include "pdcal/numeric.hpp"
#include "pdcal/pulse.hpp"
#include "pdcal/rng.hpp"

namespace pdcal {

enum class GainKind { unit_charge, exponential_gain };

inline std::string_view to_string(GainKind kind) {
    return kind == GainKind::unit_charge ? "unit_charge" : "exponential_gain";
}

inline GainKind parse_gain_kind(std::string_view text) {
    if (text == "unit_charge") return GainKind::unit_charge;
    if (text == "exponential_gain") return GainKind::exponential_gain;
    throw ConfigError("unknown gain kind '" + std::string(text) + "'");
}

struct GainModel {
    GainKind kind = GainKind::unit_charge;
    double mean_charge = 1.0;

    void validate() const {
        if (!std::isfinite(mean_charge) || mean_charge <= 0.0)
            throw ConfigError("mean_charge must be finite and > 0");
    }

    /// <q^2>/<q>^2 of the law.
    double excess_noise_factor() const { return kind == GainKind::unit_charge ? 1.0 : 2.0; }

    /// Consumes no draw for unit_charge, one word for exponential_gain.
    double draw(Rng& rng) const {
        return kind == GainKind::unit_charge ? mean_charge : rng.exponential(mean_charge);
    }
};

struct DetectorParams {
    double eta = 1.0;
    PulseShape pulse;
    GainModel gain;
    double nonlinearity_eps = 0.0;
    double dark_rate = 0.0;  // counts/s, additive Poisson background

    void validate() const {
        if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0)
            throw ConfigError("quantum efficiency must lie in [0, 1]");
        pulse.validate();
        gain.validate();
        if (!std::isfinite(nonlinearity_eps) || std::abs(nonlinearity_eps) > 0.1)
            throw ConfigError("|nonlinearity_eps| must be <= 0.1");
        if (!std::isfinite(dark_rate) || dark_rate < 0.0)
            throw ConfigError("dark_rate must be finite and >= 0");
    }
};

/// Retained events in time order with their charges.
struct DetectionRecord {
    static constexpr std::size_t kBackground = std::numeric_limits<std::size_t>::max();

    std::vector<double> times;
    std::vector<double> charges;
    std::vector<std::size_t> source_index;  // index into the incident list, or kBackground

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    double total_charge() const { return detail::sum(charges); }
};

/// Beam-splitter model of a detector with efficiency eta. Draw order per
/// incident event: one bernoulli(eta); if retained, the charge draw.
inline DetectionRecord detect(std::span<const double> times, const DetectorParams& params,
                              std::uint64_t rng_seed) {
    params.validate();
    Rng rng(rng_seed);
    DetectionRecord record;
    const auto expected = static_cast<std::size_t>(params.eta * static_cast<double>(times.size()));
    record.times.reserve(expected + 16);
    record.charges.reserve(expected + 16);
    record.source_index.reserve(expected + 16);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!rng.bernoulli(params.eta)) continue;
        record.times.push_back(times[i]);
        record.charges.push_back(params.gain.draw(rng));
        record.source_index.push_back(i);
    }
    return record;
}

/// Merges Poisson dark counts at `rate` over [0, duration) into `record`.
inline DetectionRecord add_dark_counts(const DetectionRecord& record, double rate, double duration,
                                       const GainModel& gain, std::uint64_t rng_seed) {
    if (!std::isfinite(rate) || rate < 0.0) throw ConfigError("dark_rate must be finite and >= 0");
    if (rate == 0.0) return record;
    Rng rng(rng_seed);
    DetectionRecord dark;
    for (double t = rng.exponential(1.0 / rate); t < duration; t += rng.exponential(1.0 / rate)) {
        dark.times.push_back(t);
        dark.charges.push_back(gain.draw(rng));
        dark.source_index.push_back(DetectionRecord::kBackground);
    }
    DetectionRecord merged;
    const std::size_t n = record.size() + dark.size();
    merged.times.reserve(n);
    merged.charges.reserve(n);
    merged.source_index.reserve(n);
    std::size_t a = 0;
    std::size_t b = 0;
    while (a < record.size() || b < dark.size()) {
        const bool take_a = b >= dark.size() || (a < record.size() && record.times[a] <= dark.times[b]);
        const DetectionRecord& src = take_a ? record : dark;
        std::size_t& i = take_a ? a : b;
        merged.times.push_back(src.times[i]);
        merged.charges.push_back(src.charges[i]);
        merged.source_index.push_back(src.source_index[i]);
        ++i;
    }
    return merged;
}

struct CurrentTrace {
    std::vector<double> samples;
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<std::pair<double, double>> detected_charges;  // (event time, charge)

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double span() const { return static_cast<double>(samples.size()) * dt; }
    double time_at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
};

/// Coarsest accepted sampling interval, as a fraction of tau_p.
inline constexpr double kMaxDtFraction = 0.1;

namespace detail {

// Smallest k with (t0 + k dt) - t_event >= offset, evaluated with the same
// floating-point expression used when the pulse is sampled.
inline std::size_t first_sample_at_or_after(double t0, double dt, double t_event, double offset,
                                            std::size_t n) {
    const double guess = std::ceil((t_event + offset - t0) / dt);
    auto k = static_cast<std::ptrdiff_t>(std::clamp(guess, 0.0, static_cast<double>(n)));
    auto before = [&](std::ptrdiff_t idx) {
        return (t0 + static_cast<double>(idx) * dt) - t_event < offset;
    };
    while (k > 0 && !before(k - 1)) --k;
    while (k < static_cast<std::ptrdiff_t>(n) && before(k)) ++k;
    return static_cast<std::size_t>(k);
}

}  // namespace detail

/// Sample time origin and length for a run of `duration` seconds: t0 sits at
/// the start of the pulse support and the window extends past `duration` so
/// that every pulse is complete.
struct SampleGrid {
    double dt = 0.0;
    double t0 = 0.0;
    std::size_t n = 0;

    static SampleGrid for_run(const PulseShape& pulse, double dt, double duration) {
        pulse.validate();
        if (!std::isfinite(dt) || dt <= 0.0) throw ConfigError("dt must be finite and > 0");
        if (dt > kMaxDtFraction * pulse.tau_p * (1.0 + 1e-12))
            throw ConfigError("sampling interval too coarse: dt must be <= tau_p / 10");
        if (!std::isfinite(duration) || duration <= 0.0) throw ConfigError("duration must be > 0");
        SampleGrid g;
        g.dt = dt;
        g.t0 = pulse.support_begin();
        g.n = static_cast<std::size_t>(std::ceil((duration + pulse.support_end() - g.t0) / dt));
        return g;
    }
};

/**
 * Writes samples [k_begin, k_begin + out.size()) of the pulse train of `record`
 * on `grid` into `out`. Pulses are added event by event in time order, so a
 * block-wise synthesis is bit-identical to the whole-trace one.
 */
inline void synthesize_block(const DetectionRecord& record, const PulseShape& pulse,
                             const SampleGrid& grid, std::size_t k_begin, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t k_end = k_begin + out.size();
    if (out.empty() || record.empty()) return;
    const double t_first = grid.t0 + static_cast<double>(k_begin) * grid.dt;
    const double t_last = grid.t0 + static_cast<double>(k_end) * grid.dt;
    const auto first = std::lower_bound(record.times.begin(), record.times.end(),
                                        t_first - pulse.support_end() - grid.dt);
    const auto last = std::upper_bound(first, record.times.end(),
                                       t_last - pulse.support_begin() + grid.dt);
    const bool flat = pulse.kind == PulseKind::rectangular;
    const double height = 1.0 / pulse.tau_p;
    for (auto it = first; it != last; ++it) {
        const double t = *it;
        const double q = record.charges[static_cast<std::size_t>(it - record.times.begin())];
        const std::size_t lo = std::max(
            k_begin, detail::first_sample_at_or_after(grid.t0, grid.dt, t, pulse.support_begin(), grid.n));
        if (flat) {
            const std::size_t hi = std::min(
                k_end, detail::first_sample_at_or_after(grid.t0, grid.dt, t, pulse.tau_p, grid.n));
            const double level = q * height;
            for (std::size_t k = lo; k < hi; ++k) out[k - k_begin] += level;
            continue;
        }
        for (std::size_t k = lo; k < k_end; ++k) {
            const double u = (grid.t0 + static_cast<double>(k) * grid.dt) - t;
            if (u > pulse.support_end()) break;
            out[k - k_begin] += q * pulse_value(pulse, u);
        }
    }
}

/**
 * Samples the pulse train of `record` on t_k = t0 + k dt (see SampleGrid).
 * Requires dt <= tau_p / 10 and time-ordered events.
 */
inline CurrentTrace synthesize_current(const DetectionRecord& record, const PulseShape& pulse,
                                       double dt, double duration) {
    const SampleGrid grid = SampleGrid::for_run(pulse, dt, duration);
    if (!std::is_sorted(record.times.begin(), record.times.end()))
        throw InputError("detection record is not time ordered");
    CurrentTrace trace;
    trace.dt = grid.dt;
    trace.t0 = grid.t0;
    trace.samples.resize(grid.n);
    trace.detected_charges.reserve(record.size());
    for (std::size_t i = 0; i < record.size(); ++i)
        trace.detected_charges.emplace_back(record.times[i], record.charges[i]);
    synthesize_block(record, pulse, grid, 0, trace.samples);
    return trace;
}

/// Maps every sample x -> x (1 + eps x / x_ref). eps = 0 or x_ref = 0 is the identity.
inline CurrentTrace apply_nonlinearity(CurrentTrace trace, double eps, double x_ref) {
    if (!std::isfinite(eps) || std::abs(eps) > 0.1)
        throw ConfigError("|nonlinearity eps| must be <= 0.1");
    if (!std::isfinite(x_ref) || x_ref < 0.0)
        throw InputError("nonlinearity reference must be finite and >= 0");
    if (eps == 0.0 || x_ref == 0.0) return trace;
    const double gain = eps / x_ref;
    for (double& x : trace.samples) x *= 1.0 + gain * x;
    return trace;
}

/// Reference level = trace mean.
inline CurrentTrace apply_nonlinearity(CurrentTrace trace, double eps) {
    const double x_ref = detail::mean(trace.samples);
    return apply_nonlinearity(std::move(trace), eps, x_ref);
}

/**
 * Amplifier reference level used by the calibration pipeline: mean current plus
 * the height of an isolated mean-charge pulse. Reduces to the mean for dense
 * pulse trains and to the single-pulse height for sparse ones, so a given eps
 * bounds the relative gain departure over the range the signal actually spans.
 */
inline double amplifier_reference(double mean_current, const PulseShape& pulse,
                                  const GainModel& gain) {
    return mean_current + gain.mean_charge * pulse.peak();
}

/// Trace dump: time_s,current. `max_samples` = 0 writes every sample.
inline void write_trace_csv(std::ostream& out, const CurrentTrace& trace, std::size_t max_samples) {
    out << "time_s,current\n";
    const std::size_t n = max_samples == 0 ? trace.size() : std::min(max_samples, trace.size());
    for (std::size_t k = 0; k < n; ++k)
        out << csv::num(trace.time_at(k)) << ',' << csv::num(trace.samples[k]) << '\n';
}

/// Pulse-height dump: time_s,charge.
inline void write_pulse_heights_csv(std::ostream& out, const DetectionRecord& record) {
    out << "time_s,charge\n";
    for (std::size_t i = 0; i < record.size(); ++i)
        out << csv::num(record.times[i]) << ',' << csv::num(record.charges[i]) << '\n';
}

}  // namespace pdcal
