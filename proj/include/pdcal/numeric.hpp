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

#include <cmath>
#include <cstddef>
#include <span>

namespace pdcal::detail {

/// Blocked summation; keeps rounding error near O(log n) for long traces.
inline double sum(std::span<const double> x) {
    constexpr std::size_t kBlock = 4096;
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); i += kBlock) {
        const std::size_t end = i + kBlock < x.size() ? i + kBlock : x.size();
        double partial = 0.0;
        for (std::size_t j = i; j < end; ++j) partial += x[j];
        total += partial;
    }
    return total;
}

/// Mean with one correction pass (exact for constant input).
inline double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double n = static_cast<double>(x.size());
    const double m = sum(x) / n;
    constexpr std::size_t kBlock = 4096;
    double correction = 0.0;
    for (std::size_t i = 0; i < x.size(); i += kBlock) {
        const std::size_t end = i + kBlock < x.size() ? i + kBlock : x.size();
        double partial = 0.0;
        for (std::size_t j = i; j < end; ++j) partial += x[j] - m;
        correction += partial;
    }
    return m + correction / n;
}

/// Sample standard deviation (n - 1 normalization); 0 for fewer than two values.
inline double sample_std(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}  // namespace pdcal::detail
