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

// Monte Carlo uncertainty budget for the time-domain estimator.
//
// Each trial reruns the full pipeline with a fresh derived seed. The nominal
// estimate uses an ideal amplifier; the same traces are then re-estimated with
// the configured nonlinearity magnitude at both signs. The nonlinearity
// component is the larger mean paired shift, relative to the mean nominal
// estimate. A configured constant covers the residual effects that are not
// simulated (optical losses, alignment, background light, dark current).
// Components combine with the relative statistical spread in quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pdcal/calibration.hpp"
#include "pdcal/config.hpp"
#include "pdcal/csv.hpp"
#include "pdcal/errors.hpp"
#include "pdcal/numeric.hpp"
#include "pdcal/pipeline.hpp"

namespace pdcal {

inline constexpr std::size_t kMinBudgetTrials = 30;

struct SystematicComponent {
    std::string name;
    double relative = 0.0;
};

struct BudgetReport {
    std::size_t trials = 0;
    double eta2_mean = 0.0;
    double eta2_std = 0.0;
    double statistical_relative = 0.0;  // eta2_std / eta2_mean
    std::vector<SystematicComponent> systematic_components;
    double total_uncertainty = 0.0;     // relative
    double nonlinearity_shift_plus = 0.0;   // mean eta2 shift, +eps
    double nonlinearity_shift_minus = 0.0;  // mean eta2 shift, -eps
    std::size_t flagged_trials = 0;

    const SystematicComponent& dominant_systematic() const {
        return *std::max_element(systematic_components.begin(), systematic_components.end(),
                                 [](const auto& a, const auto& b) { return a.relative < b.relative; });
    }
};

namespace detail {

// Raw sample moments of two aligned traces, enough to evaluate the lag-0
// auto and cross covariances after any amplifier map x -> x (1 + g x).
struct Lag0Moments {
    double n = 0.0;
    double x = 0.0, xx = 0.0, xxx = 0.0, xxxx = 0.0;
    double y = 0.0, yy = 0.0;
    double xy = 0.0, xxy = 0.0, xyy = 0.0, xxyy = 0.0;

    void add_block(std::span<const double> a, std::span<const double> b) {
        Lag0Moments p;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double u = a[k];
            const double v = b[k];
            const double u2 = u * u;
            const double v2 = v * v;
            p.x += u;
            p.xx += u2;
            p.xxx += u2 * u;
            p.xxxx += u2 * u2;
            p.y += v;
            p.yy += v2;
            p.xy += u * v;
            p.xxy += u2 * v;
            p.xyy += u * v2;
            p.xxyy += u2 * v2;
        }
        n += static_cast<double>(a.size());
        x += p.x, xx += p.xx, xxx += p.xxx, xxxx += p.xxxx;
        y += p.y, yy += p.yy;
        xy += p.xy, xxy += p.xxy, xyy += p.xyy, xxyy += p.xxyy;
    }

    double mean1() const { return x / n; }
    double mean2() const { return y / n; }

    // {variance of arm 1, lag-0 cross covariance} after the maps with gains g1, g2.
    std::array<double, 2> covariances(double g1, double g2) const {
        const double m1 = (x + g1 * xx) / n;
        const double m2 = (y + g2 * yy) / n;
        const double s11 = (xx + 2.0 * g1 * xxx + g1 * g1 * xxxx) / n;
        const double s12 = (xy + g1 * xxy + g2 * xyy + g1 * g2 * xxyy) / n;
        return {s11 - m1 * m1, s12 - m1 * m2};
    }
};

inline constexpr std::size_t kBudgetBlock = std::size_t{1} << 20;

// Lag-0 moments of the ideal-amplifier traces of one trial, synthesized block
// by block so that no full-length trace is held in memory.
inline Lag0Moments trial_moments(const RunConfig& cfg, const Detections& det) {
    const SampleGrid grid = SampleGrid::for_run(cfg.pulse(), cfg.dt, cfg.source.duration);
    std::vector<double> a(std::min(grid.n, kBudgetBlock));
    std::vector<double> b(a.size());
    Lag0Moments m;
    for (std::size_t k = 0; k < grid.n; k += a.size()) {
        const std::size_t len = std::min(a.size(), grid.n - k);
        const std::span<double> sa(a.data(), len);
        const std::span<double> sb(b.data(), len);
        synthesize_block(det.det1, cfg.pulse(), grid, k, sa);
        synthesize_block(det.det2, cfg.pulse(), grid, k, sb);
        m.add_block(sa, sb);
    }
    return m;
}

}  // namespace detail

inline BudgetReport uncertainty_budget(const RunConfig& cfg, std::size_t n_trials) {
    if (n_trials < kMinBudgetTrials)
        throw InputError("uncertainty budget needs at least 30 trials, got " + std::to_string(n_trials));
    cfg.validate();
    const double e1 = std::abs(cfg.detector1.nonlinearity_eps);
    const double e2 = std::abs(cfg.detector2.nonlinearity_eps);
    const std::array<double, 3> eps1{0.0, e1, -e1};
    const std::array<double, 3> eps2{0.0, e2, -e2};

    std::vector<double> nominal(n_trials);
    std::vector<double> shift_plus(n_trials);
    std::vector<double> shift_minus(n_trials);
    BudgetReport report;
    report.trials = n_trials;
    for (std::size_t t = 0; t < n_trials; ++t) {
        const RunConfig trial = trial_config(cfg, t);
        const Detections det = simulate_detections(trial);
        const GainStats gains = measured_gain_stats(trial, det);
        const detail::Lag0Moments m = detail::trial_moments(trial, det);
        const double ref1 = amplifier_reference(m.mean1(), cfg.pulse(), cfg.detector1.gain);
        const double ref2 = amplifier_reference(m.mean2(), cfg.pulse(), cfg.detector2.gain);
        std::array<double, 3> eta{};
        for (std::size_t v = 0; v < 3; ++v) {
            const auto cov = m.covariances(eps1[v] / ref1, eps2[v] / ref2);
            if (!(cov[0] > 0.0)) throw EstimationError("trial produced no arm-1 fluctuations");
            eta[v] = mode_prefactor(cfg.source.mode) * gains.correction() * cov[1] / cov[0];
        }
        nominal[t] = eta[0];
        shift_plus[t] = eta[1] - eta[0];
        shift_minus[t] = eta[2] - eta[0];
        if (!std::isfinite(eta[0]) || eta[0] < 0.0 || eta[0] > 1.0) ++report.flagged_trials;
    }

    report.eta2_mean = detail::mean(nominal);
    report.eta2_std = detail::sample_std(nominal);
    report.statistical_relative = report.eta2_std / report.eta2_mean;
    report.nonlinearity_shift_plus = detail::mean(shift_plus);
    report.nonlinearity_shift_minus = detail::mean(shift_minus);
    const double nonlinearity =
        std::max(std::abs(report.nonlinearity_shift_plus), std::abs(report.nonlinearity_shift_minus)) /
        std::abs(report.eta2_mean);
    report.systematic_components = {
        {"amplifier_nonlinearity", nonlinearity},
        {"residual_losses_alignment_background", cfg.budget.residual_systematic},
    };
    double total2 = report.statistical_relative * report.statistical_relative;
    for (const auto& c : report.systematic_components) total2 += c.relative * c.relative;
    report.total_uncertainty = std::sqrt(total2);
    return report;
}

inline void write_budget_csv(std::ostream& out, const BudgetReport& r) {
    out << "quantity,value\n";
    out << "trials," << r.trials << '\n';
    out << "eta2_mean," << csv::num(r.eta2_mean) << '\n';
    out << "eta2_std," << csv::num(r.eta2_std) << '\n';
    out << "statistical_relative," << csv::num(r.statistical_relative) << '\n';
    for (const auto& c : r.systematic_components) out << c.name << ',' << csv::num(c.relative) << '\n';
    out << "nonlinearity_shift_plus," << csv::num(r.nonlinearity_shift_plus) << '\n';
    out << "nonlinearity_shift_minus," << csv::num(r.nonlinearity_shift_minus) << '\n';
    out << "total_relative," << csv::num(r.total_uncertainty) << '\n';
}

}  // namespace pdcal
