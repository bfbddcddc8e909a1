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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pdcal/stream_gen.hpp"

using namespace pdcal;

namespace {

SourceConfig stimulated(double seed_rate, double stim_prob, double duration, std::uint64_t seed) {
    SourceConfig c;
    c.mode = SourceMode::stimulated;
    c.seed_rate = seed_rate;
    c.stim_prob = stim_prob;
    c.duration = duration;
    c.rng_seed = seed;
    return c;
}

SourceConfig spontaneous(double pair_rate, double duration, std::uint64_t seed) {
    SourceConfig c;
    c.mode = SourceMode::spontaneous;
    c.pair_rate = pair_rate;
    c.seed_rate = 0.0;
    c.duration = duration;
    c.rng_seed = seed;
    return c;
}

// Variance-to-mean ratio of counts in `windows` equal bins.
double index_of_dispersion(const std::vector<double>& times, double duration, std::size_t windows) {
    std::vector<double> counts(windows, 0.0);
    for (double t : times) counts[std::min(windows - 1, static_cast<std::size_t>(t / duration * windows))] += 1;
    double m = 0;
    for (double c : counts) m += c;
    m /= windows;
    double v = 0;
    for (double c : counts) v += (c - m) * (c - m);
    v /= windows - 1;
    return v / m;
}

}  // namespace

TEST(StreamGen, coherent_is_beam2_only) {
    auto s = gen_coherent(1e8, 1e-4, 7);
    EXPECT_TRUE(s.beam1_times.empty());
    EXPECT_TRUE(s.pair_links.empty());
    EXPECT_GT(s.beam2_times.size(), 9000u);
    EXPECT_EQ(check_stream(s, 0.0, 0), "");
}

TEST(StreamGen, coherent_zero_rate_is_empty) {
    auto s = gen_coherent(0.0, 1e-3, 1);
    EXPECT_TRUE(s.beam1_times.empty());
    EXPECT_TRUE(s.beam2_times.empty());
}

TEST(StreamGen, rejects_bad_config) {
    EXPECT_THROW(gen_coherent(-1.0, 1e-3, 1), ConfigError);
    EXPECT_THROW(gen_coherent(1e6, 0.0, 1), ConfigError);
    EXPECT_THROW(gen_coherent(std::nan(""), 1e-3, 1), ConfigError);
    auto c = stimulated(0.0, 0.01, 1e-3, 1);
    EXPECT_THROW(generate(c), ConfigError);
    c = stimulated(1e6, 1.5, 1e-3, 1);
    EXPECT_THROW(generate(c), ConfigError);
    EXPECT_THROW(gen_spontaneous(stimulated(1e6, 0.1, 1e-3, 1)), ConfigError);
    EXPECT_THROW(gen_stimulated(spontaneous(1e6, 1e-3, 1)), ConfigError);
}

TEST(StreamGen, deterministic_for_fixed_seed) {
    const auto c = stimulated(1e8, 1e-2, 1e-4, 42);
    auto a = generate(c);
    auto b = generate(c);
    EXPECT_EQ(a.beam1_times, b.beam1_times);
    EXPECT_EQ(a.beam2_times, b.beam2_times);
    EXPECT_EQ(a.pair_links, b.pair_links);
    auto other = c;
    other.rng_seed = 43;
    EXPECT_NE(generate(other).beam2_times, a.beam2_times);
}

TEST(StreamGen, chunked_matches_whole_run) {
    const auto c = stimulated(1e8, 5e-2, 2e-4, 5);
    const auto whole = generate(c);
    EventSource src(c);
    std::vector<double> b1, b2;
    std::size_t links = 0;
    while (!src.done()) {
        auto chunk = src.next_chunk(1.7e-5);
        EXPECT_EQ(check_stream(chunk, c.tau_coh, 2), "");
        EXPECT_EQ(chunk.pair_links.size(), 2 * chunk.beam1_times.size());
        b1.insert(b1.end(), chunk.beam1_times.begin(), chunk.beam1_times.end());
        b2.insert(b2.end(), chunk.beam2_times.begin(), chunk.beam2_times.end());
        links += chunk.pair_links.size();
    }
    std::sort(b1.begin(), b1.end());
    std::sort(b2.begin(), b2.end());
    EXPECT_EQ(b1, whole.beam1_times);
    EXPECT_EQ(b2, whole.beam2_times);
    EXPECT_EQ(links, whole.pair_links.size());
    EXPECT_THROW(src.next_chunk(0.0), ConfigError);
}

TEST(StreamGen, coherent_counts_are_poisson_over_seeds) {
    // N ~ Poisson(1000): sample mean over 200 seeds within 3 SEM, variance ratio near 1.
    const std::size_t runs = 200;
    std::vector<double> n(runs);
    for (std::size_t r = 0; r < runs; ++r)
        n[r] = static_cast<double>(gen_coherent(1e7, 1e-4, 1000 + r).beam2_times.size());
    double m = 0;
    for (double v : n) m += v;
    m /= runs;
    double var = 0;
    for (double v : n) var += (v - m) * (v - m);
    var /= runs - 1;
    EXPECT_NEAR(m, 1000.0, 3.0 * std::sqrt(1000.0 / runs));
    // Var of the sample variance of a Poisson(1000) ~ 2 * 1000^2 / (runs - 1).
    EXPECT_NEAR(var / 1000.0, 1.0, 3.0 * std::sqrt(2.0 / (runs - 1)));
}

TEST(StreamGen, index_of_dispersion_is_one) {
    const std::size_t windows = 200;
    const double se = std::sqrt(2.0 / (windows - 1));
    auto coh = gen_coherent(1e8, 1e-3, 3);
    EXPECT_NEAR(index_of_dispersion(coh.beam2_times, 1e-3, windows), 1.0, 3 * se);
    auto sp = generate(spontaneous(1e7, 1e-2, 4));
    EXPECT_NEAR(index_of_dispersion(sp.beam1_times, 1e-2, windows), 1.0, 3 * se);
    EXPECT_NEAR(index_of_dispersion(sp.beam2_times, 1e-2, windows), 1.0, 3 * se);
    auto st = generate(stimulated(1e8, 1e-2, 1e-2, 5));
    EXPECT_NEAR(index_of_dispersion(st.beam1_times, 1e-2, windows), 1.0, 3 * se);
}

TEST(StreamGen, spontaneous_zero_rate_is_empty) {
    auto s = gen_spontaneous(spontaneous(0.0, 1e-3, 1));
    EXPECT_TRUE(s.beam1_times.empty());
    EXPECT_TRUE(s.beam2_times.empty());
}

TEST(StreamGen, spontaneous_beams_have_equal_counts) {
    auto s = gen_spontaneous(spontaneous(1e7, 1e-2, 9));
    EXPECT_EQ(s.beam1_times.size(), s.beam2_times.size());
    EXPECT_EQ(s.pair_links.size(), s.beam1_times.size());
    EXPECT_NEAR(static_cast<double>(s.beam1_times.size()), 1e5, 5 * std::sqrt(1e5));
    EXPECT_EQ(check_stream(s, 100e-15, 1), "");
}

TEST(StreamGen, spontaneous_jitter_std_matches_tau_coh) {
    auto c = spontaneous(1e7, 1.5e-2, 11);
    auto s = gen_spontaneous(c);
    ASSERT_GE(s.pair_links.size(), 100000u);
    double sum = 0;
    double sum2 = 0;
    double worst = 0;
    for (const auto& l : s.pair_links) {
        const double d = s.beam2_times[l.beam2] - s.beam1_times[l.beam1];
        sum += d;
        sum2 += d * d;
        worst = std::max(worst, std::abs(d));
    }
    const double n = static_cast<double>(s.pair_links.size());
    const double sd = std::sqrt((sum2 - sum * sum / n) / (n - 1));
    // Truncation at 10 sigma changes the std by far less than 1e-12.
    EXPECT_NEAR(sd / c.tau_coh, 1.0, 0.02);
    EXPECT_LE(worst, kJitterCutoff * c.tau_coh * (1 + 1e-9));
}

TEST(StreamGen, stimulated_without_stimulation_is_plain_poisson) {
    auto s = gen_stimulated(stimulated(1e8, 0.0, 1e-3, 2));
    EXPECT_TRUE(s.beam1_times.empty());
    EXPECT_TRUE(s.pair_links.empty());
    EXPECT_NEAR(static_cast<double>(s.beam2_times.size()), 1e5, 5 * std::sqrt(1e5));
}

TEST(StreamGen, stimulated_thinned_counts) {
    // 1e8/s * 1e-3 * 10 ms = 1e3 stimulations (thinned-Poisson oracle).
    const auto c = stimulated(1e8, 1e-3, 10e-3, 8);
    auto s = gen_stimulated(c);
    const double n1 = static_cast<double>(s.beam1_times.size());
    EXPECT_NEAR(n1, 1e3, 3 * std::sqrt(1e3));
    // beam 2 = every seed + one twin per stimulation.
    const double seeds = static_cast<double>(s.beam2_times.size()) - n1;
    EXPECT_NEAR(seeds, 1e6, 3 * std::sqrt(1e6));
}

TEST(StreamGen, stimulated_links_twice_per_beam1_photon) {
    auto s = gen_stimulated(stimulated(1e8, 1e-2, 1e-3, 3));
    EXPECT_EQ(s.pair_links.size(), 2 * s.beam1_times.size());
    std::vector<int> uses(s.beam1_times.size(), 0);
    std::vector<int> uses2(s.beam2_times.size(), 0);
    for (const auto& l : s.pair_links) {
        ++uses[l.beam1];
        ++uses2[l.beam2];
    }
    EXPECT_TRUE(std::all_of(uses.begin(), uses.end(), [](int u) { return u == 2; }));
    EXPECT_TRUE(std::all_of(uses2.begin(), uses2.end(), [](int u) { return u <= 1; }));
    EXPECT_TRUE(std::is_sorted(s.pair_links.begin(), s.pair_links.end()));
    EXPECT_EQ(check_stream(s, 100e-15, 2), "");
    EXPECT_NE(check_stream(s, 100e-15, 1), "");
}

TEST(StreamGen, stimulated_background_pairs_add_counts) {
    auto c = stimulated(1e8, 1e-2, 1e-3, 6);
    c.pair_rate = 1e6;
    auto s = generate(c);
    // 1e3 stimulated + 1e3 spontaneous pairs in beam 1.
    EXPECT_NEAR(static_cast<double>(s.beam1_times.size()), 2e3, 4 * std::sqrt(2e3));
    EXPECT_EQ(check_stream(s, c.tau_coh, 2), "");
}

TEST(StreamGen, check_stream_catches_violations) {
    PairedEventStream s;
    s.duration = 1.0;
    s.beam1_times = {0.1, 0.2};
    s.beam2_times = {0.1};
    s.pair_links = {{0, 0}};
    EXPECT_EQ(check_stream(s, 1e-3, 2), "");
    s.pair_links = {{1, 0}};
    EXPECT_NE(check_stream(s, 1e-3, 2), "");
    s.pair_links = {{0, 3}};
    EXPECT_NE(check_stream(s, 1e-3, 2), "");
    s.pair_links.clear();
    s.beam1_times = {0.2, 0.1};
    EXPECT_NE(check_stream(s, 1e-3, 2), "");
    s.beam1_times = {0.1, 1.0};
    EXPECT_NE(check_stream(s, 1e-3, 2), "");
}

TEST(StreamGen, link_ids_and_csv) {
    auto s = generate(stimulated(1e8, 0.5, 2e-7, 4));
    const auto id1 = s.link_ids(1);
    const auto id2 = s.link_ids(2);
    for (std::size_t i = 0; i < id1.size(); ++i) EXPECT_EQ(id1[i], static_cast<std::int64_t>(i));
    EXPECT_EQ(std::count(id2.begin(), id2.end(), -1),
              static_cast<std::ptrdiff_t>(s.beam2_times.size() - 2 * s.beam1_times.size()));
    std::ostringstream out;
    write_events_csv(out, s);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "beam,time_s,link_id");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, s.beam1_times.size() + s.beam2_times.size());
}

TEST(StreamGen, source_mode_names_round_trip) {
    for (auto m : {SourceMode::coherent, SourceMode::spontaneous, SourceMode::stimulated})
        EXPECT_EQ(parse_source_mode(to_string(m)), m);
    EXPECT_THROW(parse_source_mode("laser"), ConfigError);
}
