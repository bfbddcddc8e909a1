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
#include <cstdint>
#include <numbers>
#include <random>

namespace pdcal {

/// SplitMix64 finalizer. Used to derive independent sub-seeds from one run seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of a run seeded with `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return splitmix64(base ^ splitmix64(stream));
}

/// Well-known sub-stream tags. Changing these changes every derived draw.
namespace seed_stream {
inline constexpr std::uint64_t detector1 = 0xD1;
inline constexpr std::uint64_t detector2 = 0xD2;
inline constexpr std::uint64_t dark1 = 0xDA1;
inline constexpr std::uint64_t dark2 = 0xDA2;
inline constexpr std::uint64_t trial_base = 0x10000;
}  // namespace seed_stream

/**
 * Seeded random source with a fixed, documented draw recipe.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the
 * standard. All variates are built here from raw 64-bit words instead of the
 * implementation-defined std:: distributions, so the number of words consumed
 * per variate is part of the contract:
 *   uniform      1 word   (top 53 bits, [0,1))
 *   exponential  1 word   (inverse CDF)
 *   bernoulli    1 word
 *   normal       2 words  (Box-Muller, cosine branch only)
 */
class Rng {
 public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Zero-mean normal with standard deviation `sigma`, resampled until |x| <= limit * sigma.
    double truncated_normal(double sigma, double limit) {
        for (;;) {
            const double z = normal();
            if (std::abs(z) <= limit) return sigma * z;
        }
    }

 private:
    std::mt19937_64 engine_;
};

}  // namespace pdcal
