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

// Second-order statistics of photocurrent fluctuations.
//
// Time domain: C_jk(tau_l) = <di_j(t) di_k(t + tau_l)>, di = i - <i>, on the
// lag grid tau_l = l dt, |l| <= max_lag / dt, each lag normalized by the number
// of contributing sample pairs (N - |l|). Standard errors come from the scatter
// of the same estimator over equal sub-segments (default 16), with each lag
// product assigned to the sub-segment holding its first index.
//
// Frequency domain: one-sided Welch average of non-overlapping periodograms,
// per-segment mean removed, normalized so that sum(power) * df equals the mean
// windowed segment variance.
//
// The event-domain estimator evaluates the same time-domain quantity in
// continuous time directly from detection records, using the closed-form pulse
// autoconvolution; its cost scales with the number of overlapping event pairs
// instead of the number of samples.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdcal/csv.hpp"
#include "pdcal/detector.hpp"
#include "pdcal/errors.hpp"
#include "pdcal/fft.hpp"
#include "pdcal/numeric.hpp"
#include "pdcal/pulse.hpp"

namespace pdcal {

inline constexpr std::size_t kDefaultSubsegments = 16;

struct CorrelationEstimate {
    std::vector<double> lags;  // s, symmetric about 0, strictly increasing
    std::vector<double> values;
    std::vector<double> std_error;
    std::size_t n_samples = 0;
    bool dc_removed = true;

    std::size_t zero_index() const {
        const auto it = std::find(lags.begin(), lags.end(), 0.0);
        if (it == lags.end()) throw InputError("correlation grid has no zero lag");
        return static_cast<std::size_t>(it - lags.begin());
    }
    double at_zero() const { return values[zero_index()]; }
    double std_error_at_zero() const { return std_error[zero_index()]; }
};

enum class Window { rectangular, hann };

inline std::string_view to_string(Window w) { return w == Window::hann ? "hann" : "rectangular"; }

inline Window parse_window(std::string_view text) {
    if (text == "rectangular") return Window::rectangular;
    if (text == "hann") return Window::hann;
    throw ConfigError("unknown window '" + std::string(text) + "'");
}

struct SpectrumEstimate {
    std::vector<double> freqs;  // Hz, 0 .. 1/(2 dt)
    std::vector<double> power;  // current^2 / Hz; real part for cross spectra
    std::vector<double> std_error;
    std::vector<double> imag;   // cross spectra only, diagnostics
    std::size_t n_segments = 0;
    std::size_t segment_len = 0;
    Window window = Window::rectangular;
    double dt = 0.0;

    double df() const { return 1.0 / (static_cast<double>(segment_len) * dt); }
};

struct MeanEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline double mean_current(const CurrentTrace& trace) {
    if (trace.empty()) throw InputError("mean of an empty trace");
    return detail::mean(trace.samples);
}

/// Mean current with a standard error from sub-segment scatter.
inline MeanEstimate mean_current_estimate(const CurrentTrace& trace,
                                          std::size_t n_sub = kDefaultSubsegments) {
    if (trace.size() < n_sub || n_sub < 2) throw InputError("trace too short for sub-segment errors");
    std::vector<double> parts(n_sub);
    const std::span<const double> x(trace.samples);
    for (std::size_t s = 0; s < n_sub; ++s) {
        const std::size_t a = s * x.size() / n_sub;
        const std::size_t b = (s + 1) * x.size() / n_sub;
        parts[s] = detail::mean(x.subspan(a, b - a));
    }
    return {mean_current(trace), detail::sample_std(parts) / std::sqrt(static_cast<double>(n_sub))};
}

/// Lags l*dt for |l| <= max_lag/dt.
inline std::vector<double> lag_grid(double max_lag, double dt) {
    const auto k_max = static_cast<std::ptrdiff_t>(std::floor(max_lag / dt + 1e-9));
    std::vector<double> lags;
    lags.reserve(static_cast<std::size_t>(2 * k_max + 1));
    for (std::ptrdiff_t l = -k_max; l <= k_max; ++l) lags.push_back(static_cast<double>(l) * dt);
    return lags;
}

namespace detail {

struct LagSums {
    std::size_t n_lags = 0;
    std::vector<double> sums;    // [segment][lag]
    std::vector<double> counts;  // [segment][lag]
};

// Sub-segment sums of (x[t] - mx)(y[t + l] - my), l in [-k_max, k_max], by
// overlap-save FFT blocks that never straddle a sub-segment boundary.
inline LagSums lag_sums(std::span<const double> x, double mx, std::span<const double> y, double my,
                        std::size_t k_max, std::size_t n_sub) {
    const std::size_t n = x.size();
    const std::size_t n_lags = 2 * k_max + 1;
    std::size_t m = 16384;
    while (m < 8 * n_lags) m *= 2;
    const std::size_t block = m - 2 * k_max;

    LagSums out;
    out.n_lags = n_lags;
    out.sums.assign(n_sub * n_lags, 0.0);
    out.counts.assign(n_sub * n_lags, 0.0);

    RealFft fx(m);
    RealFft fy(m);
    std::vector<std::complex<double>> x_hat(fx.bins());
    const double inv_m = 1.0 / static_cast<double>(m);
    const auto sn = static_cast<std::ptrdiff_t>(n);
    const auto sk = static_cast<std::ptrdiff_t>(k_max);

    for (std::size_t s = 0; s < n_sub; ++s) {
        const std::size_t seg_a = s * n / n_sub;
        const std::size_t seg_b = (s + 1) * n / n_sub;
        double* seg_sums = out.sums.data() + s * n_lags;
        for (std::size_t start = seg_a; start < seg_b; start += block) {
            const std::size_t len = std::min(block, seg_b - start);
            auto xr = fx.real();
            for (std::size_t j = 0; j < len; ++j) xr[j] = x[start + j] - mx;
            std::fill(xr.begin() + static_cast<std::ptrdiff_t>(len), xr.end(), 0.0);
            fx.forward();
            std::copy(fx.spectrum().begin(), fx.spectrum().end(), x_hat.begin());

            auto yr = fy.real();
            const auto base = static_cast<std::ptrdiff_t>(start) - sk;
            const std::size_t span_len = len + 2 * k_max;
            for (std::size_t j = 0; j < span_len; ++j) {
                const std::ptrdiff_t idx = base + static_cast<std::ptrdiff_t>(j);
                yr[j] = (idx >= 0 && idx < sn) ? y[static_cast<std::size_t>(idx)] - my : 0.0;
            }
            std::fill(yr.begin() + static_cast<std::ptrdiff_t>(span_len), yr.end(), 0.0);
            fy.forward();
            auto y_hat = fy.spectrum();
            for (std::size_t b = 0; b < y_hat.size(); ++b) y_hat[b] = std::conj(x_hat[b]) * y_hat[b];
            fy.inverse();
            for (std::size_t l = 0; l < n_lags; ++l) seg_sums[l] += yr[l] * inv_m;
        }
        for (std::size_t l = 0; l < n_lags; ++l) {
            const std::ptrdiff_t lag = static_cast<std::ptrdiff_t>(l) - sk;
            const std::ptrdiff_t lo = std::max(static_cast<std::ptrdiff_t>(seg_a), -lag);
            const std::ptrdiff_t hi = std::min(static_cast<std::ptrdiff_t>(seg_b), sn - lag);
            out.counts[s * n_lags + l] = static_cast<double>(std::max<std::ptrdiff_t>(0, hi - lo));
        }
    }
    return out;
}

inline CorrelationEstimate reduce_lag_sums(const LagSums& sums, std::size_t n_sub, double dt,
                                           std::size_t n_samples) {
    const std::size_t n_lags = sums.n_lags;
    const auto k_max = static_cast<std::ptrdiff_t>((n_lags - 1) / 2);
    CorrelationEstimate est;
    est.n_samples = n_samples;
    est.dc_removed = true;
    est.lags.resize(n_lags);
    est.values.resize(n_lags);
    est.std_error.resize(n_lags);
    std::vector<double> parts;
    for (std::size_t l = 0; l < n_lags; ++l) {
        est.lags[l] = static_cast<double>(static_cast<std::ptrdiff_t>(l) - k_max) * dt;
        double total = 0.0;
        double count = 0.0;
        parts.clear();
        for (std::size_t s = 0; s < n_sub; ++s) {
            const double c = sums.counts[s * n_lags + l];
            total += sums.sums[s * n_lags + l];
            count += c;
            if (c > 0.0) parts.push_back(sums.sums[s * n_lags + l] / c);
        }
        est.values[l] = count > 0.0 ? total / count : 0.0;
        est.std_error[l] = detail::sample_std(parts) / std::sqrt(static_cast<double>(parts.size()));
    }
    return est;
}

inline std::size_t checked_lag_count(const CurrentTrace& trace, double max_lag, std::size_t n_sub) {
    if (trace.empty()) throw InputError("correlation of an empty trace");
    if (!std::isfinite(max_lag) || max_lag < 0.0) throw InputError("max_lag must be >= 0");
    if (max_lag >= trace.span()) throw InputError("max_lag must be shorter than the trace span");
    if (n_sub < 2 || trace.size() < 2 * n_sub) throw InputError("trace too short for sub-segment errors");
    return static_cast<std::size_t>(std::floor(max_lag / trace.dt + 1e-9));
}

}  // namespace detail

/// Autocorrelation of current fluctuations. Symmetric in lag by construction.
inline CorrelationEstimate autocorrelation(const CurrentTrace& trace, double max_lag,
                                           std::size_t n_sub = kDefaultSubsegments) {
    const std::size_t k_max = detail::checked_lag_count(trace, max_lag, n_sub);
    const double m = detail::mean(trace.samples);
    const auto sums = detail::lag_sums(trace.samples, m, trace.samples, m, k_max, n_sub);
    auto est = detail::reduce_lag_sums(sums, n_sub, trace.dt, trace.size());
    for (std::size_t k = 1; k <= k_max; ++k) {
        est.values[k_max - k] = est.values[k_max + k];
        est.std_error[k_max - k] = est.std_error[k_max + k];
    }
    return est;
}

/// <di1(t) di2(t + tau)>; positive lags probe trace 2 after trace 1.
inline CorrelationEstimate crosscorrelation(const CurrentTrace& trace1, const CurrentTrace& trace2,
                                            double max_lag, std::size_t n_sub = kDefaultSubsegments) {
    if (trace1.dt != trace2.dt || trace1.t0 != trace2.t0 || trace1.size() != trace2.size())
        throw InputError("cross-correlation requires traces with identical dt and span");
    const std::size_t k_max = detail::checked_lag_count(trace1, max_lag, n_sub);
    const double m1 = detail::mean(trace1.samples);
    const double m2 = detail::mean(trace2.samples);
    const auto sums = detail::lag_sums(trace1.samples, m1, trace2.samples, m2, k_max, n_sub);
    return detail::reduce_lag_sums(sums, n_sub, trace1.dt, trace1.size());
}

/**
 * Continuous-time correlation of the pulse trains behind two detection records:
 *   (1/T) sum_{n in a, m in b} q_n q_m F(t_m - t_n - tau) - (Q_a/T)(Q_b/T),
 * which is the time average of i_a(t) i_b(t + tau) minus the product of the
 * mean currents. Pass the same record twice for an autocorrelation.
 */
inline CorrelationEstimate event_correlation(const DetectionRecord& a, const DetectionRecord& b,
                                             const PulseShape& pulse, double duration,
                                             std::span<const double> lags,
                                             std::size_t n_sub = kDefaultSubsegments) {
    pulse.validate();
    if (!(duration > 0.0)) throw InputError("duration must be > 0");
    if (lags.empty()) throw InputError("empty lag grid");
    if (n_sub < 2) throw InputError("need at least two sub-segments");
    const std::size_t n_lags = lags.size();
    const auto [lag_lo, lag_hi] = std::minmax_element(lags.begin(), lags.end());
    const double reach = pulse.autoconvolution_support();

    std::vector<double> sums(n_sub * n_lags, 0.0);
    for (std::size_t n = 0; n < a.size(); ++n) {
        const double tn = a.times[n];
        const double qn = a.charges[n];
        const double pos = std::clamp(tn / duration, 0.0, 1.0) * static_cast<double>(n_sub);
        const std::size_t seg = std::min(n_sub - 1, static_cast<std::size_t>(pos));
        const auto first = std::lower_bound(b.times.begin(), b.times.end(), tn + *lag_lo - reach);
        const auto last = std::upper_bound(first, b.times.end(), tn + *lag_hi + reach);
        for (auto it = first; it != last; ++it) {
            const auto m = static_cast<std::size_t>(it - b.times.begin());
            const double w = qn * b.charges[m];
            const double d = *it - tn;
            for (std::size_t l = 0; l < n_lags; ++l)
                sums[seg * n_lags + l] += w * pulse_autoconvolution(pulse, d - lags[l]);
        }
    }

    const double mu_ab = (a.total_charge() / duration) * (b.total_charge() / duration);
    const double seg_duration = duration / static_cast<double>(n_sub);
    CorrelationEstimate est;
    est.lags.assign(lags.begin(), lags.end());
    est.values.resize(n_lags);
    est.std_error.resize(n_lags);
    est.n_samples = a.size();
    est.dc_removed = true;
    std::vector<double> parts(n_sub);
    for (std::size_t l = 0; l < n_lags; ++l) {
        double total = 0.0;
        for (std::size_t s = 0; s < n_sub; ++s) {
            total += sums[s * n_lags + l];
            parts[s] = sums[s * n_lags + l] / seg_duration - mu_ab;
        }
        est.values[l] = total / duration - mu_ab;
        est.std_error[l] = detail::sample_std(parts) / std::sqrt(static_cast<double>(n_sub));
    }
    return est;
}

namespace detail {

inline std::vector<double> window_coefficients(Window window, std::size_t m) {
    std::vector<double> w(m, 1.0);
    if (window == Window::hann) {
        for (std::size_t i = 0; i < m; ++i)
            w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(m)));
    }
    return w;
}

inline void check_segmenting(const CurrentTrace& trace, std::size_t segment_len) {
    if (segment_len < 16) throw InputError("segment_len must be >= 16 samples");
    if (segment_len > trace.size()) throw InputError("segment_len exceeds the trace length");
}

// Loads one mean-removed, windowed segment into the transform buffer.
inline void load_segment(RealFft& fft, std::span<const double> seg, std::span<const double> w) {
    auto buf = fft.real();
    const double m = mean(seg);
    for (std::size_t i = 0; i < seg.size(); ++i) buf[i] = (seg[i] - m) * w[i];
}

inline SpectrumEstimate welch(const CurrentTrace& t1, const CurrentTrace* t2,
                              std::size_t segment_len, Window window) {
    const std::size_t m = segment_len;
    const std::size_t n_seg = t1.size() / m;
    const auto w = window_coefficients(window, m);
    double w2 = 0.0;
    for (double v : w) w2 += v * v;

    RealFft f1(m);
    std::unique_ptr<RealFft> f2 = t2 ? std::make_unique<RealFft>(m) : nullptr;
    const std::size_t bins = f1.bins();

    SpectrumEstimate est;
    est.n_segments = n_seg;
    est.segment_len = m;
    est.window = window;
    est.dt = t1.dt;
    est.freqs.resize(bins);
    for (std::size_t k = 0; k < bins; ++k)
        est.freqs[k] = static_cast<double>(k) / (static_cast<double>(m) * t1.dt);

    std::vector<double> scale(bins, 2.0 * t1.dt / w2);
    scale[0] = t1.dt / w2;
    if (m % 2 == 0) scale[bins - 1] = t1.dt / w2;

    // Welford accumulators over segments.
    std::vector<double> mean_re(bins, 0.0);
    std::vector<double> m2_re(bins, 0.0);
    std::vector<double> mean_im(bins, 0.0);
    const std::span<const double> x1(t1.samples);
    for (std::size_t s = 0; s < n_seg; ++s) {
        load_segment(f1, x1.subspan(s * m, m), w);
        f1.forward();
        auto a = f1.spectrum();
        std::span<std::complex<double>> b = a;
        if (f2) {
            load_segment(*f2, std::span<const double>(t2->samples).subspan(s * m, m), w);
            f2->forward();
            b = f2->spectrum();
        }
        const double count = static_cast<double>(s + 1);
        for (std::size_t k = 0; k < bins; ++k) {
            const double re = scale[k] * (a[k].real() * b[k].real() + a[k].imag() * b[k].imag());
            const double im = scale[k] * (a[k].real() * b[k].imag() - a[k].imag() * b[k].real());
            const double delta = re - mean_re[k];
            mean_re[k] += delta / count;
            m2_re[k] += delta * (re - mean_re[k]);
            mean_im[k] += (im - mean_im[k]) / count;
        }
    }
    est.power = std::move(mean_re);
    est.std_error.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        est.std_error[k] = n_seg > 1 ? std::sqrt(m2_re[k] / static_cast<double>(n_seg - 1) /
                                                 static_cast<double>(n_seg))
                                     : 0.0;
    }
    if (f2) est.imag = std::move(mean_im);
    return est;
}

}  // namespace detail

inline SpectrumEstimate noise_power_spectrum(const CurrentTrace& trace, std::size_t segment_len,
                                             Window window = Window::rectangular) {
    detail::check_segmenting(trace, segment_len);
    return detail::welch(trace, nullptr, segment_len, window);
}

/// Real part of the one-sided cross spectrum of (trace1, trace2); the imaginary
/// part is kept in `imag`.
inline SpectrumEstimate cross_power_spectrum(const CurrentTrace& trace1, const CurrentTrace& trace2,
                                             std::size_t segment_len,
                                             Window window = Window::rectangular) {
    if (trace1.dt != trace2.dt || trace1.size() != trace2.size())
        throw InputError("cross spectrum requires traces with identical dt and span");
    detail::check_segmenting(trace1, segment_len);
    return detail::welch(trace1, &trace2, segment_len, window);
}

/// Integral of the spectrum over frequency (rectangle rule on the bin grid).
inline double integrated_power(const SpectrumEstimate& spectrum) {
    return detail::sum(spectrum.power) * spectrum.df();
}

inline void write_correlation_csv(std::ostream& out, const CorrelationEstimate& est) {
    out << "lag_s,value,stderr\n";
    for (std::size_t i = 0; i < est.lags.size(); ++i)
        out << csv::num(est.lags[i]) << ',' << csv::num(est.values[i]) << ','
            << csv::num(est.std_error[i]) << '\n';
}

inline void write_spectrum_csv(std::ostream& out, const SpectrumEstimate& est) {
    out << "freq_hz,value,stderr\n";
    for (std::size_t i = 0; i < est.freqs.size(); ++i)
        out << csv::num(est.freqs[i]) << ',' << csv::num(est.power[i]) << ','
            << csv::num(est.std_error[i]) << '\n';
}

}  // namespace pdcal
