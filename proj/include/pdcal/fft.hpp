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

// Minimal RAII layer over FFTW real transforms. Plans use FFTW_ESTIMATE so
// that the chosen algorithm, and therefore every output bit, is reproducible.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace pdcal::detail {

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
struct FftwPlanDestroy {
    void operator()(fftw_plan p) const noexcept { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

/// Paired forward (r2c) and inverse (c2r) transforms of length n on owned buffers.
class RealFft {
 public:
    explicit RealFft(std::size_t n)
        : n_(n),
          real_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
          spectrum_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
        const int len = static_cast<int>(n);
        forward_.reset(fftw_plan_dft_r2c_1d(len, real_.get(), spectrum_.get(), FFTW_ESTIMATE));
        inverse_.reset(fftw_plan_dft_c2r_1d(len, spectrum_.get(), real_.get(), FFTW_ESTIMATE));
    }

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    std::span<double> real() { return {real_.get(), n_}; }
    std::span<std::complex<double>> spectrum() {
        return {reinterpret_cast<std::complex<double>*>(spectrum_.get()), bins()};
    }

    void forward() { fftw_execute(forward_.get()); }
    /// Unnormalized: forward then inverse scales by size().
    void inverse() { fftw_execute(inverse_.get()); }

 private:
    std::size_t n_;
    std::unique_ptr<double, FftwFree> real_;
    std::unique_ptr<fftw_complex, FftwFree> spectrum_;
    FftwPlan forward_;
    FftwPlan inverse_;
};

}  // namespace pdcal::detail
