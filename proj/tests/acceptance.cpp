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


// Acceptance suite. Prints one PASS/FAIL line per criterion (indented lines
// are supporting detail) and exits nonzero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "pdcal/pdcal.hpp"

namespace fs = std::filesystem;
using namespace pdcal;

namespace {

int failures = 0;

void detail(const std::string& text) { std::cout << "    " << text << '\n'; }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

struct Check {
    bool ok = true;
    void require(bool cond, const std::string& what) {
        detail(std::string(cond ? "ok    " : "FAIL  ") + what);
        ok = ok && cond;
    }
};

void criterion(int id, const std::string& name, const std::function<bool()>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body();
    } catch (const std::exception& e) {
        detail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << id << ": " << name << "  (" << fmt(secs)
              << " s)" << std::endl;
    if (!ok) ++failures;
}

double mean_of(const std::vector<double>& v) { return detail::mean(v); }
double sem_of(const std::vector<double>& v) {
    return detail::sample_std(v) / std::sqrt(static_cast<double>(v.size()));
}

const std::array<double, 1> kZeroLag{0.0};

EtaEstimate event_estimate(const RunConfig& cfg, const DetectionRecord& d1, const DetectionRecord& d2,
                           const GainStats& gains) {
    const auto a = event_correlation(d1, d1, cfg.pulse(), cfg.source.duration, kZeroLag);
    const auto c = event_correlation(d1, d2, cfg.pulse(), cfg.source.duration, kZeroLag);
    return estimate_eta_time_domain(a, c, gains, cfg.source.mode);
}

// 1. Mean current equals eta <q> F.
bool mean_current_law() {
    Check check;
    const double flux = 1e8;
    const double T = 10e-3;
    for (double eta : {0.3, 1.0}) {
        const auto stream = gen_coherent(flux, T, 101);
        DetectorParams p;
        p.eta = eta;
        const auto rec = detect(stream.beam2_times, p, derive_seed(101, seed_stream::detector2));
        const auto trace = synthesize_current(rec, p.pulse, 100e-12, T);
        const auto m = mean_current_estimate(trace);
        const double oracle = eta * p.gain.mean_charge * flux;
        check.require(std::abs(m.value - oracle) <= 3 * m.std_error,
                      "eta=" + fmt(eta) + ": <i>=" + fmt(m.value) + " oracle=" + fmt(oracle) +
                          " se=" + fmt(m.std_error) + " (" + fmt(std::abs(m.value - oracle) / m.std_error) +
                          " se)");
    }
    return check.ok;
}

struct DefaultRun {
    RunConfig cfg;
    Detections det;
    TracePair traces;
    GainStats gains;
};

DefaultRun make_default_run() {
    DefaultRun r;
    r.det = simulate_detections(r.cfg);
    r.traces = synthesize_traces(r.cfg, r.det);
    r.gains = measured_gain_stats(r.cfg, r.det);
    return r;
}

// 2. Arm-1 autocorrelation: triangle shape and Campbell lag-0 level.
bool shot_noise_autocorrelation(const DefaultRun& run) {
    Check check;
    const auto& cfg = run.cfg;
    const auto a = autocorrelation(run.traces.trace1, cfg.max_lag());
    const PulseShape& pulse = cfg.pulse();
    double s = 0;
    for (std::size_t i = 0; i < a.lags.size(); ++i) {
        const double d = a.values[i] / a.at_zero() - pulse_autoconvolution(pulse, a.lags[i]) * pulse.tau_p;
        s += d * d;
    }
    const double rms = std::sqrt(s / static_cast<double>(a.lags.size()));
    check.require(rms < 0.02, "shape normalized RMS deviation " + fmt(rms) + " < 0.02 over " +
                                  std::to_string(a.lags.size()) + " lags");
    const double f1 = cfg.source.seed_rate * cfg.source.stim_prob;
    const double q2 = 1.0;  // unit charge
    const double oracle = cfg.detector1.eta * q2 * f1 / pulse.tau_p;
    const double dev = std::abs(a.at_zero() - oracle) / a.std_error_at_zero();
    check.require(dev <= 3, "lag-0 " + fmt(a.at_zero()) + " vs eta1 <q1^2> F1 / tau_p = " + fmt(oracle) +
                                " (" + fmt(dev) + " se)");
    return check.ok;
}

// 3. Lag-0 cross/auto ratio is 2 eta2 (stimulated) and eta2 (spontaneous).
bool factor_two() {
    Check check;
    RunConfig st;
    st.detector1.eta = 1.0;
    {
        const auto det = simulate_detections(st);
        const auto tr = synthesize_traces(st, det);
        const auto a = autocorrelation(tr.trace1, 0.0);
        const auto c = crosscorrelation(tr.trace1, tr.trace2, 0.0);
        const double ratio = c.at_zero() / a.at_zero();
        const double target = 2 * st.detector2.eta;
        const double rel = std::abs(ratio / target - 1);
        check.require(rel <= 0.01, "stimulated: ratio " + fmt(ratio) + " vs 2 eta2 = " + fmt(target) +
                                       " (relative deviation " + fmt(rel) + ", limit 0.01)");
    }
    RunConfig sp = st;
    sp.source.mode = SourceMode::spontaneous;
    sp.source.pair_rate = 1e7;
    sp.source.seed_rate = 0.0;
    {
        const auto det = simulate_detections(sp);
        const auto tr = synthesize_traces(sp, det);
        const auto a = autocorrelation(tr.trace1, 0.0);
        const auto c = crosscorrelation(tr.trace1, tr.trace2, 0.0);
        const double ratio = c.at_zero() / a.at_zero();
        const double target = sp.detector2.eta;
        const double rel = std::abs(ratio / target - 1);
        check.require(rel <= 0.01, "spontaneous (pair_rate 1e7/s): ratio " + fmt(ratio) + " vs eta2 = " +
                                       fmt(target) + " (relative deviation " + fmt(rel) + ", limit 0.01)");
    }
    return check.ok;
}

// 4. Ensemble recovery over eta2 and invariance under eta1.
bool estimator_recovery() {
    Check check;
    const std::size_t trials = 100;
    const std::vector<double> eta2s{0.1, 0.4, 0.62, 0.9};
    const std::vector<double> eta1s{0.3, 0.6, 1.0};
    const RunConfig base;  // eta1 = 0.9 for the eta2 sweep
    std::vector<std::vector<double>> by_eta2(eta2s.size());
    std::vector<std::vector<double>> by_eta1(eta1s.size());
    std::vector<std::vector<double>> spont(eta2s.size());

    for (std::size_t t = 0; t < trials; ++t) {
        const RunConfig cfg = trial_config(base, t);
        const std::uint64_t seed = cfg.source.rng_seed;
        const auto stream = generate(cfg.source);
        auto det_for = [&](const std::vector<double>& times, DetectorParams p, double eta, std::uint64_t tag) {
            p.eta = eta;
            return detect(times, p, derive_seed(seed, tag));
        };
        std::vector<DetectionRecord> d2;
        for (double e2 : eta2s) d2.push_back(det_for(stream.beam2_times, cfg.detector2, e2, seed_stream::detector2));
        const auto d1 = det_for(stream.beam1_times, cfg.detector1, cfg.detector1.eta, seed_stream::detector1);
        for (std::size_t i = 0; i < eta2s.size(); ++i)
            by_eta2[i].push_back(event_estimate(cfg, d1, d2[i], GainStats::from_charges(d1.charges, d2[i].charges)).eta2);
        const std::size_t i062 = 2;
        for (std::size_t j = 0; j < eta1s.size(); ++j) {
            const auto d1j = det_for(stream.beam1_times, cfg.detector1, eta1s[j], seed_stream::detector1);
            by_eta1[j].push_back(
                event_estimate(cfg, d1j, d2[i062], GainStats::from_charges(d1j.charges, d2[i062].charges)).eta2);
        }

        RunConfig sc = cfg;
        sc.source.mode = SourceMode::spontaneous;
        sc.source.pair_rate = 1e7;
        sc.source.seed_rate = 0.0;
        const auto ss = generate(sc.source);
        const auto s1 = det_for(ss.beam1_times, sc.detector1, sc.detector1.eta, seed_stream::detector1);
        for (std::size_t i = 0; i < eta2s.size(); ++i) {
            const auto s2 = det_for(ss.beam2_times, sc.detector2, eta2s[i], seed_stream::detector2);
            spont[i].push_back(event_estimate(sc, s1, s2, GainStats::from_charges(s1.charges, s2.charges)).eta2);
        }
    }

    auto judge = [&](const std::string& label, const std::vector<double>& v, double truth) {
        const double m = mean_of(v);
        const double sem = sem_of(v);
        check.require(std::abs(m - truth) <= 3 * sem, label + ": mean " + fmt(m) + " truth " + fmt(truth) +
                                                          " sem " + fmt(sem) + " (" +
                                                          fmt(std::abs(m - truth) / sem) + " sem)");
    };
    for (std::size_t i = 0; i < eta2s.size(); ++i) judge("stimulated eta2=" + fmt(eta2s[i]), by_eta2[i], eta2s[i]);
    for (std::size_t i = 0; i < eta2s.size(); ++i) judge("spontaneous eta2=" + fmt(eta2s[i]), spont[i], eta2s[i]);
    for (std::size_t j = 0; j < eta1s.size(); ++j) judge("eta1=" + fmt(eta1s[j]) + ", eta2=0.62", by_eta1[j], 0.62);
    for (std::size_t j = 0; j < eta1s.size(); ++j) {
        for (std::size_t k = j + 1; k < eta1s.size(); ++k) {
            const double d = mean_of(by_eta1[j]) - mean_of(by_eta1[k]);
            const double s = std::hypot(sem_of(by_eta1[j]), sem_of(by_eta1[k]));
            check.require(std::abs(d) <= 3 * s, "eta1 " + fmt(eta1s[j]) + " vs " + fmt(eta1s[k]) +
                                                    ": difference " + fmt(d) + " (" + fmt(std::abs(d) / s) +
                                                    " combined sem)");
        }
    }
    detail("100 trials per setting, continuous-time lag-0 correlator");
    return check.ok;
}

// 5. Exponential gain on detector 1: correction factors remove the factor-2 bias.
bool gain_correction() {
    Check check;
    RunConfig base;
    base.detector1.gain.kind = GainKind::exponential_gain;
    const std::size_t trials = 30;
    std::vector<double> corrected, uncorrected;
    std::vector<double> pooled;
    for (std::size_t t = 0; t < trials; ++t) {
        const RunConfig cfg = trial_config(base, t);
        const auto det = simulate_detections(cfg);
        corrected.push_back(event_domain_estimate(cfg, det, measured_gain_stats(cfg, det)).eta2);
        uncorrected.push_back(event_domain_estimate(cfg, det, GainStats::unit()).eta2);
        pooled.insert(pooled.end(), det.det1.charges.begin(), det.det1.charges.end());
    }
    const double truth = base.detector2.eta;
    const double factor = truth / mean_of(uncorrected);
    check.require(std::abs(factor / 2.0 - 1) <= 0.05,
                  "uncorrected bias factor truth/mean = " + fmt(factor) + " (2.0 +/- 5%)");
    const double m = mean_of(corrected);
    const double sem = sem_of(corrected);
    check.require(std::abs(m - truth) <= 3 * sem, "corrected mean " + fmt(m) + " sem " + fmt(sem) + " (" +
                                                      fmt(std::abs(m - truth) / sem) + " sem)");
    const auto enf = excess_noise_factor(pooled);
    check.require(std::abs(enf.value - 2.0) <= 3 * enf.std_error,
                  "excess noise factor " + fmt(enf.value) + " +/- " + fmt(enf.std_error) + " from " +
                      std::to_string(pooled.size()) + " pulse heights");
    return check.ok;
}

// 6. Spectral vs time-domain estimates, Wiener-Khinchin and Parseval.
bool spectral_consistency(const DefaultRun& run) {
    Check check;
    const auto td = time_domain_calibration(run.cfg, run.traces, run.gains);
    const auto sp = spectral_calibration(run.cfg, run.traces, run.gains);
    const double combined = std::hypot(td.eta.stat_uncertainty, sp.eta.stat_uncertainty);
    const double diff = std::abs(td.eta.eta2 - sp.eta.eta2);
    check.require(diff <= 2 * combined, "time domain " + fmt(td.eta.eta2) + " +/- " + fmt(td.eta.stat_uncertainty) +
                                            ", spectral " + fmt(sp.eta.eta2) + " +/- " +
                                            fmt(sp.eta.stat_uncertainty) + " (" + fmt(diff / combined) +
                                            " combined sigma)");

    // Wiener-Khinchin on arm 1 with the calibration segment length.
    const std::size_t m = run.cfg.analysis.segment_len;
    const auto& trace = run.traces.trace1;
    const auto a = autocorrelation(trace, static_cast<double>(m - 1) * trace.dt);
    const std::size_t z = a.zero_index();
    std::size_t worst_bin = 0;
    double worst = 0;
    for (std::size_t k = 1; k < m / 4; ++k) {
        double wk = a.values[z];
        for (std::size_t l = 1; l < m; ++l)
            wk += 2.0 * (1.0 - static_cast<double>(l) / m) * a.values[z + l] *
                  std::cos(2.0 * std::numbers::pi * static_cast<double>(k * l % m) / m);
        wk *= 2.0 * trace.dt;
        const double dev = std::abs(sp.auto1.power[k] - wk) / sp.auto1.std_error[k];
        if (dev > worst) {
            worst = dev;
            worst_bin = k;
        }
    }
    check.require(worst <= 3, "Wiener-Khinchin: worst bin " + std::to_string(worst_bin) + " of " +
                                  std::to_string(m / 4 - 1) + " at " + fmt(worst) + " se");

    auto parseval = [&](const std::string& arm, const CurrentTrace& t, const SpectrumEstimate& s) {
        const std::size_t n = s.n_segments * s.segment_len;
        const std::span<const double> used(t.samples.data(), n);
        const double mu = detail::mean(used);
        double v = 0;
        for (double x : used) v += (x - mu) * (x - mu);
        v /= static_cast<double>(n);
        const double rel = std::abs(integrated_power(s) / v - 1);
        check.require(rel <= 0.01, "Parseval (" + arm + "): integrated power / variance - 1 = " + fmt(rel));
    };
    parseval("arm 1", trace, sp.auto1);
    parseval("arm 2", run.traces.trace2, noise_power_spectrum(run.traces.trace2, m));
    return check.ok;
}

// 7. One-percent amplifier nonlinearity in the budget.
bool nonlinearity_systematic() {
    Check check;
    RunConfig cfg;
    cfg.detector1.nonlinearity_eps = 0.01;
    cfg.detector2.nonlinearity_eps = 0.01;
    const auto r = uncertainty_budget(cfg, kMinBudgetTrials);
    const double nl = r.systematic_components[0].relative;
    detail("eps=0.01: mean shifts +eps " + fmt(r.nonlinearity_shift_plus) + ", -eps " +
           fmt(r.nonlinearity_shift_minus) + " on eta2 " + fmt(r.eta2_mean));
    check.require(nl >= 0.002 && nl <= 0.05, "eps=0.01: relative bias " + fmt(nl) + " in [0.002, 0.05]");
    check.require(r.dominant_systematic().name == "amplifier_nonlinearity",
                  "dominant systematic: " + r.dominant_systematic().name);

    RunConfig ideal;
    const auto r0 = uncertainty_budget(ideal, kMinBudgetTrials);
    const double sem = r0.eta2_std / std::sqrt(static_cast<double>(r0.trials));
    const double bias = r0.eta2_mean - ideal.detector2.eta;
    check.require(r0.systematic_components[0].relative == 0.0 && std::abs(bias) <= 3 * sem,
                  "eps=0: nonlinearity component " + fmt(r0.systematic_components[0].relative) +
                      ", bias " + fmt(bias) + " (" + fmt(std::abs(bias) / sem) + " sem)");
    return check.ok;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// 8. Every command is byte-reproducible.
bool determinism() {
    Check check;
    const auto root = fs::temp_directory_path() / "pdcal_acceptance_determinism";
    fs::remove_all(root);
    using Command = CommandResult (*)(const RunConfig&);
    const std::vector<std::pair<std::string, Command>> commands{
        {"simulate", cmd_simulate}, {"calibrate", cmd_calibrate}, {"spectrum", cmd_spectrum}, {"budget", cmd_budget}};
    for (const auto& [name, command] : commands) {
        std::vector<fs::path> dirs;
        for (const char* rep : {"a", "b"}) {
            RunConfig cfg;
            cfg.source.duration = 1e-3;
            cfg.source.rng_seed = 2024;
            cfg.detector1.gain.kind = GainKind::exponential_gain;
            cfg.detector1.nonlinearity_eps = 0.01;
            cfg.output.dir = (root / name / rep).string();
            command(cfg);
            dirs.push_back(cfg.output.dir);
        }
        std::size_t files = 0;
        bool same = true;
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            ++files;
            same = same && slurp(entry.path()) == slurp(dirs[1] / entry.path().filename());
        }
        check.require(same && files > 0, name + ": " + std::to_string(files) + " files byte-identical");
    }
    fs::remove_all(root);
    return check.ok;
}

}  // namespace

int main() {
    std::cout << "pdcal acceptance suite" << std::endl;
    criterion(1, "mean-current law", mean_current_law);
    {
        // Criteria 2 and 6 analyze the same default run.
        const DefaultRun run = make_default_run();
        criterion(2, "shot-noise autocorrelation", [&] { return shot_noise_autocorrelation(run); });
        criterion(3, "factor 2 in the cross/auto ratio", factor_two);
        criterion(4, "estimator recovery", estimator_recovery);
        criterion(5, "gain correction", gain_correction);
        criterion(6, "spectral consistency", [&] { return spectral_consistency(run); });
    }
    criterion(7, "nonlinearity systematic", nonlinearity_systematic);
    criterion(8, "determinism", determinism);
    std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL") << std::endl;
    return failures == 0 ? 0 : 1;
}
