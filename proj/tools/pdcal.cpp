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

// pdcal: simulate | calibrate | spectrum | budget
//
// Exit status: 0 all outputs written and no estimate flagged, 1 invalid
// configuration or input, 2 estimator failure or flagged estimate.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pdcal/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Correlated photon stream simulator and analog detector calibration"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "Run configuration file (sectioned key=value)");
    app.add_option("--set", overrides, "Override, e.g. --set source.duration=1e-3 (repeatable)")
        ->take_all();
    app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
    app.add_option("--seed", seed, "Run seed (overrides source.seed)");

    auto* simulate = app.add_subcommand("simulate", "Write photon events, pulse heights and traces");
    auto* calibrate = app.add_subcommand("calibrate", "Time-domain and spectral eta2 estimates");
    auto* spectrum = app.add_subcommand("spectrum", "Auto and cross noise power spectra");
    auto* budget = app.add_subcommand("budget", "Monte Carlo uncertainty budget");

    CLI11_PARSE(app, argc, argv);

    try {
        if (out_dir) overrides.push_back("output.dir=" + *out_dir);
        if (seed) overrides.push_back("source.seed=" + std::to_string(*seed));
        const pdcal::RunConfig cfg = pdcal::load_run_config(config_path, overrides);

        pdcal::CommandResult result;
        if (simulate->parsed()) result = pdcal::cmd_simulate(cfg);
        else if (calibrate->parsed()) result = pdcal::cmd_calibrate(cfg);
        else if (spectrum->parsed()) result = pdcal::cmd_spectrum(cfg);
        else if (budget->parsed()) result = pdcal::cmd_budget(cfg);
        std::cout << result.summary;
        return result.ok ? 0 : 2;
    } catch (const pdcal::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const pdcal::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 1;
    } catch (const pdcal::EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
