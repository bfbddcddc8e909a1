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

// simulate -> detect -> synthesize -> correlate -> estimate, for one seed.
//
// Seeds: the source uses config.source.rng_seed directly; detectors and dark
// counts use derive_seed(rng_seed, seed_stream::*).

#include <array>
#include <cstdint>
#include <utility>

#include "pdcal/calibration.hpp"
#include "pdcal/config.hpp"
#include "pdcal/correlator.hpp"
#include "pdcal/detector.hpp"
#include "pdcal/rng.hpp"
#include "pdcal/stream_gen.hpp"

namespace pdcal {

struct Detections {
    PairedEventStream stream;
    DetectionRecord det1;
    DetectionRecord det2;
};

inline Detections simulate_detections(const RunConfig& cfg) {
    const std::uint64_t seed = cfg.source.rng_seed;
    Detections out;
    out.stream = generate(cfg.source);
    out.det1 = detect(out.stream.beam1_times, cfg.detector1, derive_seed(seed, seed_stream::detector1));
    out.det2 = detect(out.stream.beam2_times, cfg.detector2, derive_seed(seed, seed_stream::detector2));
    const double T = cfg.source.duration;
    if (cfg.detector1.dark_rate > 0.0)
        out.det1 = add_dark_counts(out.det1, cfg.detector1.dark_rate, T, cfg.detector1.gain,
                                   derive_seed(seed, seed_stream::dark1));
    if (cfg.detector2.dark_rate > 0.0)
        out.det2 = add_dark_counts(out.det2, cfg.detector2.dark_rate, T, cfg.detector2.gain,
                                   derive_seed(seed, seed_stream::dark2));
    return out;
}

struct TracePair {
    CurrentTrace trace1;
    CurrentTrace trace2;
};

/// Sampled currents; with `amplify` the configured nonlinearity is applied.
inline TracePair synthesize_traces(const RunConfig& cfg, const Detections& det, bool amplify = true) {
    TracePair out;
    out.trace1 = synthesize_current(det.det1, cfg.pulse(), cfg.dt, cfg.source.duration);
    out.trace2 = synthesize_current(det.det2, cfg.pulse(), cfg.dt, cfg.source.duration);
    if (amplify) {
        const double ref1 = amplifier_reference(detail::mean(out.trace1.samples), cfg.pulse(),
                                                cfg.detector1.gain);
        const double ref2 = amplifier_reference(detail::mean(out.trace2.samples), cfg.pulse(),
                                                cfg.detector2.gain);
        out.trace1 = apply_nonlinearity(std::move(out.trace1), cfg.detector1.nonlinearity_eps, ref1);
        out.trace2 = apply_nonlinearity(std::move(out.trace2), cfg.detector2.nonlinearity_eps, ref2);
    }
    return out;
}

/// Charge moments from the measured pulse heights; nominal moments when a
/// detector recorded nothing.
inline GainStats measured_gain_stats(const RunConfig& cfg, const Detections& det) {
    if (det.det1.empty() || det.det2.empty())
        return GainStats::nominal(cfg.detector1.gain, cfg.detector2.gain);
    return GainStats::from_charges(det.det1.charges, det.det2.charges);
}

struct TimeDomainResult {
    CorrelationEstimate auto1;
    CorrelationEstimate cross12;
    EtaEstimate eta;
};

inline TimeDomainResult time_domain_calibration(const RunConfig& cfg, const TracePair& traces,
                                                const GainStats& gains) {
    TimeDomainResult out;
    out.auto1 = autocorrelation(traces.trace1, cfg.max_lag());
    out.cross12 = crosscorrelation(traces.trace1, traces.trace2, cfg.max_lag());
    out.eta = estimate_eta_time_domain(out.auto1, out.cross12, gains, cfg.source.mode);
    return out;
}

struct SpectralResult {
    SpectrumEstimate auto1;
    SpectrumEstimate cross12;
    EtaEstimate eta;
};

inline SpectralResult spectral_calibration(const RunConfig& cfg, const TracePair& traces,
                                           const GainStats& gains) {
    SpectralResult out;
    out.auto1 = noise_power_spectrum(traces.trace1, cfg.analysis.segment_len, cfg.analysis.window);
    out.cross12 = cross_power_spectrum(traces.trace1, traces.trace2, cfg.analysis.segment_len,
                                       cfg.analysis.window);
    out.eta = estimate_eta_spectral(out.auto1, out.cross12, cfg.analysis.band, gains,
                                    cfg.source.mode, cfg.pulse());
    return out;
}

/// Lag-0 estimate from the continuous-time event correlator (no sampling).
inline EtaEstimate event_domain_estimate(const RunConfig& cfg, const Detections& det,
                                         const GainStats& gains) {
    const std::array<double, 1> zero{0.0};
    const auto auto1 = event_correlation(det.det1, det.det1, cfg.pulse(), cfg.source.duration, zero);
    const auto cross = event_correlation(det.det1, det.det2, cfg.pulse(), cfg.source.duration, zero);
    return estimate_eta_time_domain(auto1, cross, gains, cfg.source.mode);
}

/// Copy of `cfg` reseeded for trial `index` of an ensemble.
inline RunConfig trial_config(const RunConfig& cfg, std::uint64_t index) {
    RunConfig out = cfg;
    out.source.rng_seed = derive_seed(cfg.source.rng_seed, seed_stream::trial_base + index);
    return out;
}

}  // namespace pdcal
