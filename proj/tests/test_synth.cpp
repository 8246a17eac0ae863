#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "physioml/stats.hpp"
#include "physioml/synth.hpp"

using namespace physioml;

namespace {

SynthConfig quiet_config() {
    SynthConfig cfg;
    cfg.n_participants = 1;
    cfg.phases = {{"baseline", 300.0, 0.0}};
    cfg.mean_hr_bpm = 60.0;
    cfg.hr_arousal_gain_bpm = 0.0;
    cfg.rsa_depth_ms = 0.0;
    cfg.mayer_depth_ms = 0.0;
    cfg.noise_std = 0.0;
    cfg.hr_participant_spread_bpm = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("degenerate config yields exactly 1000 ms RR intervals", "[synth]") {
    auto [corpus, truth] = synth_corpus(quiet_config());
    REQUIRE(corpus.phases.size() == 1);
    REQUIRE_FALSE(truth.phases[0].rr_ms.empty());
    for (double rr : truth.phases[0].rr_ms) REQUIRE(rr == 1000.0);
}

TEST_CASE("SCR event counts follow the planted Poisson rate", "[synth]") {
    // 3 events/min over 300 s: counts are Poisson(15). Check the Monte-Carlo
    // mean over 120 seeds against 15 within 3 standard errors.
    const int n_seeds = 120;
    double total = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        SynthConfig cfg = quiet_config();
        cfg.scr_base_rate_per_min = 3.0;
        cfg.scr_arousal_gain_per_min = 0.0;
        cfg.seed = static_cast<std::uint64_t>(s + 1);
        auto [corpus, truth] = synth_corpus(cfg);
        total += static_cast<double>(truth.phases[0].scr_events.size());
    }
    const double mean_count = total / n_seeds;
    const double expected = 15.0;
    const double se = std::sqrt(expected / n_seeds);
    REQUIRE(std::fabs(mean_count - expected) <= 3.0 * se);
}

TEST_CASE("equal seeds give bit-identical corpora and ground truth", "[synth]") {
    SynthConfig cfg;
    cfg.n_participants = 2;
    cfg.phases = {{"a", 150.0, 0.2}, {"b", 150.0, 0.8}};
    cfg.noise_std = 0.03;
    cfg.rr_jitter_ms = 8.0;
    cfg.seed = 99;
    auto [c1, t1] = synth_corpus(cfg);
    auto [c2, t2] = synth_corpus(cfg);
    REQUIRE(c1.phases.size() == c2.phases.size());
    for (std::size_t i = 0; i < c1.phases.size(); ++i) {
        REQUIRE(c1.phases[i].ecg.samples == c2.phases[i].ecg.samples);
        REQUIRE(c1.phases[i].eda.samples == c2.phases[i].eda.samples);
        REQUIRE(t1.phases[i].beat_times_s == t2.phases[i].beat_times_s);
        REQUIRE(t1.phases[i].scr_events.size() == t2.phases[i].scr_events.size());
        REQUIRE(t1.phases[i].label == t2.phases[i].label);
    }
}

TEST_CASE("mean RR tracks the configured heart rate within 1%", "[synth]") {
    SynthConfig cfg = quiet_config();
    cfg.rsa_depth_ms = 25.0;
    cfg.mayer_depth_ms = 20.0;
    cfg.hr_arousal_gain_bpm = 30.0;
    cfg.phases = {{"stress", 300.0, 0.5}};
    auto [corpus, truth] = synth_corpus(cfg);
    const double expected = 60000.0 / (60.0 + 30.0 * 0.5);
    const double m = mean(truth.phases[0].rr_ms);
    REQUIRE(std::fabs(m - expected) <= 0.01 * expected);
}

TEST_CASE("beat times are strictly increasing and SCRs stay in bounds", "[synth]") {
    SynthConfig cfg;
    cfg.n_participants = 3;
    cfg.phases = {{"a", 180.0, 0.7}};
    cfg.rr_jitter_ms = 25.0;
    cfg.scr_base_rate_per_min = 5.0;
    auto [corpus, truth] = synth_corpus(cfg);
    for (const auto& pt : truth.phases) {
        for (std::size_t i = 1; i < pt.beat_times_s.size(); ++i) {
            REQUIRE(pt.beat_times_s[i] > pt.beat_times_s[i - 1]);
        }
        for (const auto& ev : pt.scr_events) {
            REQUIRE(ev.onset_s >= 0.0);
            REQUIRE(ev.onset_s <= 180.0);
            REQUIRE(ev.amplitude_us >= 0.05);
        }
    }
}

TEST_CASE("config invariants are enforced", "[synth]") {
    SynthConfig cfg = quiet_config();
    cfg.phases = {{"tiny", 60.0, 0.0}};  // below the 120 s floor
    REQUIRE_THROWS_AS(synth_corpus(cfg), Error);

    SynthConfig cfg2 = quiet_config();
    cfg2.hr_arousal_gain_bpm = -1.0;
    REQUIRE_THROWS_AS(synth_corpus(cfg2), Error);

    SynthConfig cfg3 = quiet_config();
    cfg3.n_participants = 0;
    REQUIRE_THROWS_AS(synth_corpus(cfg3), Error);
}
