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

// Absolute quantum-efficiency estimators for detector 2.
//
// In the event model every detected beam-1 photon carries `partners` time
// correlated photons in beam 2 (1 for spontaneous pairs, 2 for a stimulated
// pair plus its seed), which gives
//   C_11(0) = eta1 <q1^2> F1 F(0),
//   C_12(0) = partners eta1 eta2 <q1><q2> F1 F(0),
// and therefore
//   eta2 = (1 / partners) * (<q1^2> / (<q1><q2>)) * C_12 / C_11.
// The charge factor is reported as gain ratio <q1>/<q2> times the excess noise
// factor <q1^2>/<q1>^2 of detector 1. For equal mean gains it coincides with
// the commonly quoted (<q1>/<q2>)(<q1^2>/<q2>^2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdcal/correlator.hpp"
#include "pdcal/csv.hpp"
#include "pdcal/detector.hpp"
#include "pdcal/errors.hpp"
#include "pdcal/numeric.hpp"
#include "pdcal/stream_gen.hpp"

namespace pdcal {

enum class EstimationMethod { time_domain, spectral };

inline std::string_view to_string(EstimationMethod m) {
    return m == EstimationMethod::time_domain ? "time_domain" : "spectral";
}

/// 1/2 for stimulated emission (seed + twin), 1 for spontaneous pairs.
inline double mode_prefactor(SourceMode mode) {
    switch (mode) {
        case SourceMode::stimulated: return 0.5;
        case SourceMode::spontaneous: return 1.0;
        case SourceMode::coherent: break;
    }
    throw EstimationError("a coherent source carries no twin correlation to calibrate against");
}

/// Charge moments entering the estimator.
struct GainStats {
    double mean_q1 = 1.0;
    double mean_q2 = 1.0;
    double mean_q1_sq = 1.0;

    double gain_ratio() const { return mean_q1 / mean_q2; }
    double excess_noise_factor() const { return mean_q1_sq / (mean_q1 * mean_q1); }
    double correction() const { return gain_ratio() * excess_noise_factor(); }

    /// No charge correction (unit, noiseless gain on both detectors).
    static GainStats unit() { return {}; }

    static GainStats nominal(const GainModel& g1, const GainModel& g2) {
        return {g1.mean_charge, g2.mean_charge,
                g1.excess_noise_factor() * g1.mean_charge * g1.mean_charge};
    }

    /// Sample moments of measured pulse heights.
    static GainStats from_charges(std::span<const double> q1, std::span<const double> q2) {
        if (q1.empty() || q2.empty()) throw InputError("pulse-height lists must not be empty");
        double s2 = 0.0;
        for (double q : q1) s2 += q * q;
        return {detail::mean(q1), detail::mean(q2), s2 / static_cast<double>(q1.size())};
    }
};

struct EtaEstimate {
    double eta2 = 0.0;
    double stat_uncertainty = 0.0;
    EstimationMethod method = EstimationMethod::time_domain;
    SourceMode mode = SourceMode::stimulated;
    double prefactor = 0.5;
    double gain_ratio = 1.0;
    double excess_noise_factor = 1.0;
    double raw_ratio = 0.0;  // cross / auto before any factor

    /// Values outside [0, 1] (or non-finite) indicate a broken configuration.
    bool flagged() const { return !std::isfinite(eta2) || eta2 < 0.0 || eta2 > 1.0; }
};

namespace detail {

inline EtaEstimate finish_estimate(double cross, double cross_se, double autov, double auto_se,
                                   const GainStats& gains, SourceMode mode,
                                   EstimationMethod method) {
    if (!(autov > 0.0)) throw EstimationError("auto-correlation peak is not positive");
    EtaEstimate est;
    est.method = method;
    est.mode = mode;
    est.prefactor = mode_prefactor(mode);
    est.gain_ratio = gains.gain_ratio();
    est.excess_noise_factor = gains.excess_noise_factor();
    est.raw_ratio = cross / autov;
    est.eta2 = est.prefactor * gains.correction() * est.raw_ratio;
    // First order, numerator and denominator treated as independent.
    const double rel_auto = auto_se / autov;
    const double rel_cross = cross != 0.0 ? cross_se / cross : 0.0;
    est.stat_uncertainty = cross != 0.0
                               ? std::abs(est.eta2) * std::hypot(rel_cross, rel_auto)
                               : est.prefactor * gains.correction() * cross_se / autov;
    return est;
}

}  // namespace detail

/// Lag-0 ratio of cross- to auto-correlation.
inline EtaEstimate estimate_eta_time_domain(const CorrelationEstimate& auto1,
                                            const CorrelationEstimate& cross12,
                                            const GainStats& gains, SourceMode mode) {
    if (auto1.lags != cross12.lags) throw InputError("auto and cross estimates use different lag grids");
    if (!auto1.dc_removed || !cross12.dc_removed)
        throw InputError("calibration requires DC-removed correlations");
    const std::size_t z = auto1.zero_index();
    return detail::finish_estimate(cross12.values[z], cross12.std_error[z], auto1.values[z],
                                   auto1.std_error[z], gains, mode, EstimationMethod::time_domain);
}

struct FrequencyBand {
    double lo = 1e6;
    double hi = 3e7;
};

/// Highest frequency accepted as shot-noise plateau, as a fraction of 1/tau_p.
inline constexpr double kPlateauFraction = 0.1;
inline constexpr std::size_t kMinBandBins = 8;

/// Ratio of band-averaged cross and auto spectra, in [lo, hi] within the plateau.
inline EtaEstimate estimate_eta_spectral(const SpectrumEstimate& autospec1,
                                         const SpectrumEstimate& crossspec12, FrequencyBand band,
                                         const GainStats& gains, SourceMode mode,
                                         const PulseShape& pulse) {
    if (autospec1.freqs != crossspec12.freqs) throw InputError("spectra use different frequency grids");
    const double plateau = kPlateauFraction / pulse.tau_p;
    if (!(band.lo > 0.0) || !(band.hi > band.lo))
        throw EstimationError("spectral band must satisfy 0 < lo < hi");
    if (band.hi > plateau)
        throw EstimationError("spectral band upper edge " + csv::num(band.hi) +
                              " Hz lies outside the shot-noise plateau (<= " + csv::num(plateau) +
                              " Hz for tau_p = " + csv::num(pulse.tau_p) + " s)");
    double a = 0.0;
    double a_var = 0.0;
    double c = 0.0;
    double c_var = 0.0;
    std::size_t bins = 0;
    for (std::size_t k = 0; k < autospec1.freqs.size(); ++k) {
        const double f = autospec1.freqs[k];
        if (f < band.lo || f > band.hi) continue;
        a += autospec1.power[k];
        a_var += autospec1.std_error[k] * autospec1.std_error[k];
        c += crossspec12.power[k];
        c_var += crossspec12.std_error[k] * crossspec12.std_error[k];
        ++bins;
    }
    if (bins < kMinBandBins)
        throw EstimationError("spectral band holds " + std::to_string(bins) +
                              " bins; at least 8 are required");
    const double nb = static_cast<double>(bins);
    return detail::finish_estimate(c / nb, std::sqrt(c_var) / nb, a / nb, std::sqrt(a_var) / nb,
                                   gains, mode, EstimationMethod::spectral);
}

struct ExcessNoiseEstimate {
    double value = 1.0;
    double std_error = 0.0;
};

inline constexpr std::size_t kMinPulseHeights = 1000;

/// <q^2>/<q>^2 from a pulse-height list, with a jackknife standard error.
inline ExcessNoiseEstimate excess_noise_factor(std::span<const double> charges) {
    if (charges.size() < kMinPulseHeights)
        throw InputError("excess noise factor needs at least 1000 pulse heights");
    const double n = static_cast<double>(charges.size());
    const double m = detail::mean(charges);
    if (!(m > 0.0)) throw InputError("pulse heights must have a positive mean");
    double ss = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    for (double q : charges) {
        ss += (q - m) * (q - m);
        s1 += q;
        s2 += q * q;
    }
    ExcessNoiseEstimate out;
    out.value = 1.0 + (ss / n) / (m * m);

    // Leave-one-out replicates from running sums.
    std::vector<double> replicas(charges.size());
    for (std::size_t i = 0; i < charges.size(); ++i) {
        const double a1 = (s1 - charges[i]) / (n - 1.0);
        const double a2 = (s2 - charges[i] * charges[i]) / (n - 1.0);
        replicas[i] = a2 / (a1 * a1);
    }
    const double rm = detail::mean(replicas);
    double acc = 0.0;
    for (double r : replicas) acc += (r - rm) * (r - rm);
    out.std_error = std::sqrt((n - 1.0) / n * acc);
    return out;
}

inline void write_eta_csv(std::ostream& out, std::span<const EtaEstimate> estimates) {
    out << "method,mode,eta2,stat_uncertainty,prefactor,gain_ratio,excess_noise_factor,raw_ratio,"
           "flagged\n";
    for (const auto& e : estimates) {
        out << to_string(e.method) << ',' << to_string(e.mode) << ',' << csv::num(e.eta2) << ','
            << csv::num(e.stat_uncertainty) << ',' << csv::num(e.prefactor) << ','
            << csv::num(e.gain_ratio) << ',' << csv::num(e.excess_noise_factor) << ','
            << csv::num(e.raw_ratio) << ',' << (e.flagged() ? 1 : 0) << '\n';
    }
}

}  // namespace pdcal
