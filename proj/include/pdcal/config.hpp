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

// Run configuration: a sectioned key=value file plus "section.key=value"
// overrides. Missing keys take the desk-scale defaults below.
//
//   [source]     mode, pair_rate, seed_rate, stim_prob, tau_coh, duration, seed
//   [pulse]      kind, tau_p                 (shared by both detectors)
//   [detector1]  eta, gain, mean_charge, nonlinearity_eps, dark_rate
//   [detector2]  same keys as detector1
//   [sampling]   dt
//   [analysis]   max_lag, segment_len, window, band_lo, band_hi
//   [output]     dir, max_trace_samples
//   [budget]     trials, residual_systematic

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdcal/calibration.hpp"
#include "pdcal/correlator.hpp"
#include "pdcal/detector.hpp"
#include "pdcal/errors.hpp"
#include "pdcal/stream_gen.hpp"

namespace pdcal {

struct AnalysisConfig {
    std::optional<double> max_lag;  // default: 5 tau_p
    std::size_t segment_len = 8192;
    Window window = Window::rectangular;
    FrequencyBand band{1e6, 3e7};
};

struct OutputConfig {
    std::string dir = "out";
    std::size_t max_trace_samples = 100000;  // 0 = full trace
};

struct BudgetConfig {
    std::size_t trials = 30;
    double residual_systematic = 1e-3;
};

struct RunConfig {
    SourceConfig source;
    DetectorParams detector1{0.9, {}, {}, 0.0, 0.0};
    DetectorParams detector2{0.62, {}, {}, 0.0, 0.0};
    double dt = 100e-12;
    AnalysisConfig analysis;
    OutputConfig output;
    BudgetConfig budget;

    const PulseShape& pulse() const { return detector1.pulse; }
    double max_lag() const { return analysis.max_lag.value_or(5.0 * pulse().tau_p); }

    void validate() const {
        source.validate();
        detector1.validate();
        detector2.validate();
        if (!(detector1.pulse == detector2.pulse))
            throw ConfigError("both detectors must share one pulse shape");
        if (!std::isfinite(dt) || dt <= 0.0) throw ConfigError("sampling.dt must be > 0");
        if (dt > kMaxDtFraction * pulse().tau_p * (1.0 + 1e-12))
            throw ConfigError("sampling.dt must be <= tau_p / 10");
        if (!std::isfinite(max_lag()) || max_lag() < 0.0 || max_lag() >= source.duration)
            throw ConfigError("analysis.max_lag must lie in [0, duration)");
        if (analysis.segment_len < 16) throw ConfigError("analysis.segment_len must be >= 16");
        if (!std::isfinite(budget.residual_systematic) || budget.residual_systematic < 0.0)
            throw ConfigError("budget.residual_systematic must be >= 0");
    }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"source", {"mode", "pair_rate", "seed_rate", "stim_prob", "tau_coh", "duration", "seed"}},
        {"pulse", {"kind", "tau_p"}},
        {"detector1", {"eta", "gain", "mean_charge", "nonlinearity_eps", "dark_rate"}},
        {"detector2", {"eta", "gain", "mean_charge", "nonlinearity_eps", "dark_rate"}},
        {"sampling", {"dt"}},
        {"analysis", {"max_lag", "segment_len", "window", "band_lo", "band_hi"}},
        {"output", {"dir", "max_trace_samples"}},
        {"budget", {"trials", "residual_systematic"}},
    };
    return keys;
}

template <typename T>
T read(const boost::property_tree::ptree& pt, const std::string& key, T fallback) {
    const auto node = pt.get_child_optional(key);
    if (!node) return fallback;
    const auto value = node->get_value_optional<T>();
    if (!value) throw ConfigError("cannot parse value '" + node->data() + "' for " + key);
    return *value;
}

inline void read_detector(const boost::property_tree::ptree& pt, const std::string& section,
                          DetectorParams& det) {
    det.eta = read(pt, section + ".eta", det.eta);
    det.gain.kind = parse_gain_kind(read<std::string>(pt, section + ".gain",
                                                      std::string(to_string(det.gain.kind))));
    det.gain.mean_charge = read(pt, section + ".mean_charge", det.gain.mean_charge);
    det.nonlinearity_eps = read(pt, section + ".nonlinearity_eps", det.nonlinearity_eps);
    det.dark_rate = read(pt, section + ".dark_rate", det.dark_rate);
}

}  // namespace detail

/// Builds a validated RunConfig from a property tree (sections as top-level children).
inline RunConfig run_config_from_tree(const boost::property_tree::ptree& pt) {
    const auto& known = detail::known_keys();
    for (const auto& [section, children] : pt) {
        const auto it = known.find(section);
        if (it == known.end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, unused] : children) {
            if (!it->second.contains(key))
                throw ConfigError("unknown config key " + section + "." + key);
        }
    }

    using detail::read;
    RunConfig cfg;
    auto& src = cfg.source;
    src.mode = parse_source_mode(read<std::string>(pt, "source.mode", std::string(to_string(src.mode))));
    src.pair_rate = read(pt, "source.pair_rate", src.pair_rate);
    src.seed_rate = read(pt, "source.seed_rate", src.seed_rate);
    src.stim_prob = read(pt, "source.stim_prob", src.stim_prob);
    src.tau_coh = read(pt, "source.tau_coh", src.tau_coh);
    src.duration = read(pt, "source.duration", src.duration);
    src.rng_seed = read<std::uint64_t>(pt, "source.seed", src.rng_seed);

    PulseShape pulse;
    pulse.kind = parse_pulse_kind(read<std::string>(pt, "pulse.kind", std::string(to_string(pulse.kind))));
    pulse.tau_p = read(pt, "pulse.tau_p", pulse.tau_p);
    cfg.detector1.pulse = pulse;
    cfg.detector2.pulse = pulse;
    detail::read_detector(pt, "detector1", cfg.detector1);
    detail::read_detector(pt, "detector2", cfg.detector2);

    cfg.dt = read(pt, "sampling.dt", cfg.dt);
    if (pt.get_child_optional("analysis.max_lag")) cfg.analysis.max_lag = read(pt, "analysis.max_lag", 0.0);
    cfg.analysis.segment_len = read<std::size_t>(pt, "analysis.segment_len", cfg.analysis.segment_len);
    cfg.analysis.window = parse_window(read<std::string>(pt, "analysis.window",
                                                         std::string(to_string(cfg.analysis.window))));
    cfg.analysis.band.lo = read(pt, "analysis.band_lo", cfg.analysis.band.lo);
    cfg.analysis.band.hi = read(pt, "analysis.band_hi", cfg.analysis.band.hi);
    cfg.output.dir = read<std::string>(pt, "output.dir", cfg.output.dir);
    cfg.output.max_trace_samples =
        read<std::size_t>(pt, "output.max_trace_samples", cfg.output.max_trace_samples);
    cfg.budget.trials = read<std::size_t>(pt, "budget.trials", cfg.budget.trials);
    cfg.budget.residual_systematic =
        read(pt, "budget.residual_systematic", cfg.budget.residual_systematic);
    cfg.validate();
    return cfg;
}

/// Applies one "section.key=value" override to a property tree.
inline void apply_override(boost::property_tree::ptree& pt, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' lacks '='");
    std::string key = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);
    auto trim = [](std::string& s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() ||
        key.find('.', dot + 1) != std::string::npos)
        throw ConfigError("override key '" + key + "' must look like section.key");
    pt.put(key, value);
}

/// Reads `path` (if non-empty), applies overrides in order, validates.
inline RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    boost::property_tree::ptree pt;
    if (!path.empty()) {
        try {
            boost::property_tree::ini_parser::read_ini(path, pt);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(std::string("cannot read config: ") + e.what());
        }
    }
    for (const auto& o : overrides) apply_override(pt, o);
    return run_config_from_tree(pt);
}

}  // namespace pdcal
