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

#include <stdexcept>
#include <string>

namespace pdcal {

/// Invalid run or component configuration (bad rates, efficiencies, sampling).
class ConfigError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input data handed to an estimator (empty traces, mismatched grids).
class InputError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

/// An estimator could not produce a meaningful value from valid inputs.
class EstimationError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

}  // namespace pdcal
