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

// Unit-area detector pulse f(t) and its autoconvolution
// F(tau) = integral f(t) f(t + tau) dt.
//
//   rectangular            1/tau_p on [0, tau_p)
//   gaussian               sigma = tau_p, centred, cut at +/- 6 sigma
//   one_sided_exponential  exp(-t/tau_p)/tau_p on [0, 20 tau_p]
//
// Truncated shapes are renormalized so the area over the support is 1.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "pdcal/errors.hpp"

namespace pdcal {

enum class PulseKind { rectangular, gaussian, one_sided_exponential };

inline std::string_view to_string(PulseKind kind) {
    switch (kind) {
        case PulseKind::rectangular: return "rectangular";
        case PulseKind::gaussian: return "gaussian";
        case PulseKind::one_sided_exponential: return "one_sided_exponential";
    }
    return "unknown";
}

inline PulseKind parse_pulse_kind(std::string_view text) {
    if (text == "rectangular") return PulseKind::rectangular;
    if (text == "gaussian") return PulseKind::gaussian;
    if (text == "one_sided_exponential" || text == "exponential")
        return PulseKind::one_sided_exponential;
    throw ConfigError("unknown pulse kind '" + std::string(text) + "'");
}

inline constexpr double kGaussianCutoff = 6.0;      // in sigma
inline constexpr double kExponentialCutoff = 20.0;  // in tau_p

struct PulseShape {
    PulseKind kind = PulseKind::rectangular;
    double tau_p = 3e-9;

    bool operator==(const PulseShape&) const = default;

    void validate() const {
        if (!std::isfinite(tau_p) || tau_p <= 0.0) throw ConfigError("tau_p must be finite and > 0");
    }

    double support_begin() const {
        return kind == PulseKind::gaussian ? -kGaussianCutoff * tau_p : 0.0;
    }

    double support_end() const {
        switch (kind) {
            case PulseKind::rectangular: return tau_p;
            case PulseKind::gaussian: return kGaussianCutoff * tau_p;
            case PulseKind::one_sided_exponential: return kExponentialCutoff * tau_p;
        }
        return 0.0;
    }

    /// F(tau) vanishes for |tau| >= this value.
    double autoconvolution_support() const { return support_end() - support_begin(); }

    /// Normalization of the truncated shape (area before renormalization).
    double truncated_area() const {
        switch (kind) {
            case PulseKind::rectangular: return 1.0;
            case PulseKind::gaussian: return std::erf(kGaussianCutoff / std::numbers::sqrt2);
            case PulseKind::one_sided_exponential: return -std::expm1(-kExponentialCutoff);
        }
        return 1.0;
    }

    double peak() const {
        switch (kind) {
            case PulseKind::rectangular: return 1.0 / tau_p;
            case PulseKind::gaussian:
                return 1.0 / (tau_p * std::sqrt(2.0 * std::numbers::pi) * truncated_area());
            case PulseKind::one_sided_exponential: return 1.0 / (tau_p * truncated_area());
        }
        return 0.0;
    }
};

inline double pulse_value(const PulseShape& shape, double t) {
    const double tau = shape.tau_p;
    switch (shape.kind) {
        case PulseKind::rectangular:
            return (t >= 0.0 && t < tau) ? 1.0 / tau : 0.0;
        case PulseKind::gaussian: {
            if (std::abs(t) > kGaussianCutoff * tau) return 0.0;
            const double z = t / tau;
            return shape.peak() * std::exp(-0.5 * z * z);
        }
        case PulseKind::one_sided_exponential:
            if (t < 0.0 || t > kExponentialCutoff * tau) return 0.0;
            return shape.peak() * std::exp(-t / tau);
    }
    return 0.0;
}

inline double pulse_autoconvolution(const PulseShape& shape, double lag) {
    const double tau = shape.tau_p;
    const double s = std::abs(lag);
    if (s >= shape.autoconvolution_support()) return 0.0;
    const double z = shape.truncated_area();
    switch (shape.kind) {
        case PulseKind::rectangular:
            return (1.0 - s / tau) / tau;
        case PulseKind::gaussian: {
            // Product of the two Gaussians is Gaussian in (t + lag/2); the
            // overlap of the truncation windows is symmetric about it.
            const double u = s / tau;
            return std::exp(-0.25 * u * u) * std::erf(kGaussianCutoff - 0.5 * u) /
                   (2.0 * tau * std::sqrt(std::numbers::pi) * z * z);
        }
        case PulseKind::one_sided_exponential: {
            const double overlap = kExponentialCutoff * tau - s;
            return std::exp(-s / tau) * (-std::expm1(-2.0 * overlap / tau)) / (2.0 * tau * z * z);
        }
    }
    return 0.0;
}

}  // namespace pdcal
