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

// Batch commands behind the pdcal CLI. Each writes its artifacts into
// config.output.dir and returns whether every estimator stayed unflagged.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "pdcal/budget.hpp"
#include "pdcal/calibration.hpp"
#include "pdcal/config.hpp"
#include "pdcal/correlator.hpp"
#include "pdcal/csv.hpp"
#include "pdcal/pipeline.hpp"

namespace pdcal {

struct CommandResult {
    bool ok = true;
    std::string summary;
};

namespace detail {

inline std::filesystem::path prepare_output_dir(const RunConfig& cfg) {
    std::filesystem::path dir(cfg.output.dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw ConfigError("cannot create output directory " + dir.string());
    return dir;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    auto out = csv::open(path.string());
    writer(out);
    out.flush();
    if (!out) throw ConfigError("failed writing " + path.string());
}

inline void describe_run(std::ostringstream& s, const RunConfig& cfg) {
    const auto& src = cfg.source;
    s << "source: mode=" << to_string(src.mode) << " seed_rate=" << csv::num(src.seed_rate)
      << " pair_rate=" << csv::num(src.pair_rate) << " stim_prob=" << csv::num(src.stim_prob)
      << " tau_coh=" << csv::num(src.tau_coh) << " duration=" << csv::num(src.duration)
      << " seed=" << src.rng_seed << '\n';
    s << "pulse: " << to_string(cfg.pulse().kind) << " tau_p=" << csv::num(cfg.pulse().tau_p)
      << " dt=" << csv::num(cfg.dt) << '\n';
    for (int j = 1; j <= 2; ++j) {
        const auto& d = j == 1 ? cfg.detector1 : cfg.detector2;
        s << "detector" << j << ": eta=" << csv::num(d.eta) << " gain=" << to_string(d.gain.kind)
          << " mean_charge=" << csv::num(d.gain.mean_charge)
          << " nonlinearity_eps=" << csv::num(d.nonlinearity_eps)
          << " dark_rate=" << csv::num(d.dark_rate) << '\n';
    }
}

inline void describe_estimate(std::ostringstream& s, const EtaEstimate& e) {
    s << "eta2 (" << to_string(e.method) << "): " << csv::num(e.eta2) << " +/- "
      << csv::num(e.stat_uncertainty) << "  [prefactor " << csv::num(e.prefactor) << " ("
      << to_string(e.mode) << "), gain ratio " << csv::num(e.gain_ratio) << ", excess noise factor "
      << csv::num(e.excess_noise_factor) << (e.flagged() ? ", FLAGGED: outside [0, 1]" : "")
      << "]\n";
}

}  // namespace detail

/// events.csv, trace1.csv, trace2.csv, pulses1.csv, pulses2.csv, summary.txt
inline CommandResult cmd_simulate(const RunConfig& cfg) {
    cfg.validate();
    const auto dir = detail::prepare_output_dir(cfg);
    const Detections det = simulate_detections(cfg);
    const TracePair traces = synthesize_traces(cfg, det);
    detail::write_file(dir / "events.csv", [&](auto& o) { write_events_csv(o, det.stream); });
    detail::write_file(dir / "trace1.csv",
                       [&](auto& o) { write_trace_csv(o, traces.trace1, cfg.output.max_trace_samples); });
    detail::write_file(dir / "trace2.csv",
                       [&](auto& o) { write_trace_csv(o, traces.trace2, cfg.output.max_trace_samples); });
    detail::write_file(dir / "pulses1.csv", [&](auto& o) { write_pulse_heights_csv(o, det.det1); });
    detail::write_file(dir / "pulses2.csv", [&](auto& o) { write_pulse_heights_csv(o, det.det2); });

    std::ostringstream s;
    s << "pdcal simulate\n";
    detail::describe_run(s, cfg);
    s << "incident photons: beam1=" << det.stream.beam1_times.size()
      << " beam2=" << det.stream.beam2_times.size() << " links=" << det.stream.pair_links.size() << '\n';
    s << "detected events: detector1=" << det.det1.size() << " detector2=" << det.det2.size() << '\n';
    s << "trace samples: " << traces.trace1.size() << " (dumped "
      << (cfg.output.max_trace_samples == 0 ? traces.trace1.size()
                                            : std::min(cfg.output.max_trace_samples, traces.trace1.size()))
      << ")\n";
    CommandResult result{true, s.str()};
    detail::write_file(dir / "summary.txt", [&](auto& o) { o << result.summary; });
    return result;
}

/// corr_auto.csv, corr_cross.csv, spec_auto.csv, spec_cross.csv, eta.csv, summary.txt
inline CommandResult cmd_calibrate(const RunConfig& cfg) {
    cfg.validate();
    const auto dir = detail::prepare_output_dir(cfg);
    const Detections det = simulate_detections(cfg);
    const TracePair traces = synthesize_traces(cfg, det);
    const GainStats gains = measured_gain_stats(cfg, det);
    const auto td = time_domain_calibration(cfg, traces, gains);
    const auto sp = spectral_calibration(cfg, traces, gains);

    detail::write_file(dir / "corr_auto.csv", [&](auto& o) { write_correlation_csv(o, td.auto1); });
    detail::write_file(dir / "corr_cross.csv", [&](auto& o) { write_correlation_csv(o, td.cross12); });
    detail::write_file(dir / "spec_auto.csv", [&](auto& o) { write_spectrum_csv(o, sp.auto1); });
    detail::write_file(dir / "spec_cross.csv", [&](auto& o) { write_spectrum_csv(o, sp.cross12); });
    const std::vector<EtaEstimate> estimates{td.eta, sp.eta};
    detail::write_file(dir / "eta.csv", [&](auto& o) { write_eta_csv(o, estimates); });

    std::ostringstream s;
    s << "pdcal calibrate\n";
    detail::describe_run(s, cfg);
    s << "detected events: detector1=" << det.det1.size() << " detector2=" << det.det2.size() << '\n';
    s << "lag-0 auto=" << csv::num(td.auto1.at_zero()) << " cross=" << csv::num(td.cross12.at_zero())
      << " cross/auto=" << csv::num(td.eta.raw_ratio) << '\n';
    s << "spectral band: [" << csv::num(cfg.analysis.band.lo) << ", " << csv::num(cfg.analysis.band.hi)
      << "] Hz, segments=" << sp.auto1.n_segments << '\n';
    detail::describe_estimate(s, td.eta);
    detail::describe_estimate(s, sp.eta);
    CommandResult result{!td.eta.flagged() && !sp.eta.flagged(), s.str()};
    detail::write_file(dir / "summary.txt", [&](auto& o) { o << result.summary; });
    return result;
}

/// spec_auto.csv, spec_cross.csv, summary.txt
inline CommandResult cmd_spectrum(const RunConfig& cfg) {
    cfg.validate();
    const auto dir = detail::prepare_output_dir(cfg);
    const Detections det = simulate_detections(cfg);
    const TracePair traces = synthesize_traces(cfg, det);
    const auto a = noise_power_spectrum(traces.trace1, cfg.analysis.segment_len, cfg.analysis.window);
    const auto c = cross_power_spectrum(traces.trace1, traces.trace2, cfg.analysis.segment_len,
                                        cfg.analysis.window);
    detail::write_file(dir / "spec_auto.csv", [&](auto& o) { write_spectrum_csv(o, a); });
    detail::write_file(dir / "spec_cross.csv", [&](auto& o) { write_spectrum_csv(o, c); });

    std::ostringstream s;
    s << "pdcal spectrum\n";
    detail::describe_run(s, cfg);
    s << "segments=" << a.n_segments << " segment_len=" << a.segment_len
      << " window=" << to_string(a.window) << " df=" << csv::num(a.df()) << " Hz\n";
    s << "integrated auto power=" << csv::num(integrated_power(a))
      << " integrated cross power=" << csv::num(integrated_power(c)) << '\n';
    CommandResult result{true, s.str()};
    detail::write_file(dir / "summary.txt", [&](auto& o) { o << result.summary; });
    return result;
}

/// budget.csv, summary.txt
inline CommandResult cmd_budget(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.budget.trials < kMinBudgetTrials)
        throw InputError("budget.trials must be >= 30, got " + std::to_string(cfg.budget.trials));
    const auto dir = detail::prepare_output_dir(cfg);
    const BudgetReport r = uncertainty_budget(cfg, cfg.budget.trials);
    detail::write_file(dir / "budget.csv", [&](auto& o) { write_budget_csv(o, r); });

    std::ostringstream s;
    s << "pdcal budget\n";
    detail::describe_run(s, cfg);
    s << "trials: " << r.trials << '\n';
    s << "eta2 mean: " << csv::num(r.eta2_mean) << "  std: " << csv::num(r.eta2_std)
      << "  (relative " << csv::num(r.statistical_relative) << ")\n";
    s << "systematic components (relative):\n";
    for (const auto& c : r.systematic_components) s << "  " << c.name << ": " << csv::num(c.relative) << '\n';
    s << "dominant systematic: " << r.dominant_systematic().name << '\n';
    s << "total (quadrature, relative): " << csv::num(r.total_uncertainty) << '\n';
    if (r.flagged_trials > 0) s << "flagged trials: " << r.flagged_trials << '\n';
    CommandResult result{r.flagged_trials == 0, s.str()};
    detail::write_file(dir / "summary.txt", [&](auto& o) { o << result.summary; });
    return result;
}

}  // namespace pdcal
