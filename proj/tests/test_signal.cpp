#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "physioml/signal.hpp"

using namespace physioml;

TEST_CASE("validate_trace accepts a minimal valid trace", "[signal]") {
    SignalTrace t{{0.0, 0.1, 0.2}, 250.0, Modality::ecg};
    REQUIRE_NOTHROW(validate_trace(t));
    REQUIRE(t.duration_s() == Catch::Approx(3.0 / 250.0));
}

TEST_CASE("validate_trace rejects a non-positive rate", "[signal]") {
    SignalTrace t{{0.0, 0.1}, 0.0, Modality::ecg};
    try {
        validate_trace(t);
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::non_positive_rate);
    }
}

TEST_CASE("validate_trace reports the index of a non-finite sample", "[signal]") {
    SignalTrace t{{0.0, std::numeric_limits<double>::quiet_NaN()}, 250.0, Modality::ecg};
    try {
        validate_trace(t);
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::non_finite);
        REQUIRE(e.index() == 1);
    }
}

TEST_CASE("validate_trace rejects an empty trace", "[signal]") {
    SignalTrace t{{}, 250.0, Modality::ecg};
    REQUIRE_THROWS_AS(validate_trace(t), Error);
}

TEST_CASE("report validation enforces scheme ranges and shapes", "[signal]") {
    RawReport suds{LabelScheme::suds, 40.0, std::nullopt};
    REQUIRE_NOTHROW(validate_report(suds));

    RawReport out_of_range{LabelScheme::suds, 101.0, std::nullopt};
    REQUIRE_THROWS_AS(validate_report(out_of_range), Error);

    RawReport stai_low{LabelScheme::stai6, 5.0, std::nullopt};
    REQUIRE_THROWS_AS(validate_report(stai_low), Error);

    RawReport arousal{LabelScheme::arousal_continuous, std::nullopt, std::vector<double>{4.0, 6.0}};
    REQUIRE_NOTHROW(validate_report(arousal));

    RawReport both{LabelScheme::suds, 40.0, std::vector<double>{4.0}};
    REQUIRE_THROWS_AS(validate_report(both), Error);

    RawReport bad_series{LabelScheme::arousal_continuous, std::nullopt, std::vector<double>{0.5}};
    REQUIRE_THROWS_AS(validate_report(bad_series), Error);
}

TEST_CASE("phase validation requires matching durations", "[signal]") {
    PhaseRecord p;
    p.participant_id = "p001";
    p.phase_name = "baseline";
    p.ecg = SignalTrace{std::vector<double>(2500, 0.0), 250.0, Modality::ecg};
    p.eda = SignalTrace{std::vector<double>(500, 2.0), 50.0, Modality::eda};
    p.self_report = RawReport{LabelScheme::suds, 10.0, std::nullopt};
    REQUIRE_NOTHROW(validate_phase(p));  // both 10 s

    p.eda.samples.resize(400);  // 8 s vs 10 s
    REQUIRE_THROWS_AS(validate_phase(p), Error);
}

TEST_CASE("corpus validation enforces one scheme corpus-wide", "[signal]") {
    PhaseRecord p;
    p.participant_id = "p001";
    p.phase_name = "baseline";
    p.ecg = SignalTrace{std::vector<double>(2500, 0.0), 250.0, Modality::ecg};
    p.eda = SignalTrace{std::vector<double>(500, 2.0), 50.0, Modality::eda};
    p.self_report = RawReport{LabelScheme::stai6, 12.0, std::nullopt};

    Corpus c{"demo", LabelScheme::suds, {p}};
    try {
        validate_corpus(c);
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::scheme_mismatch);
    }
}

TEST_CASE("feature vector round-trips through its canonical array order", "[signal]") {
    FeatureVector f;
    const auto rng_fill = [](FeatureVector& v) {
        auto a = v.to_array();
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 + 1.25 * static_cast<double>(i);
        v = FeatureVector::from_array(a);
    };
    rng_fill(f);
    const auto a = f.to_array();
    REQUIRE(a[0] == f.bpm);
    REQUIRE(a[1] == f.rmssd_ms);
    REQUIRE(a[2] == f.sdnn_ms);
    REQUIRE(a[3] == f.hf_rr);
    REQUIRE(a[4] == f.lf_rr);
    REQUIRE(a[5] == f.lf_hf_ratio);
    REQUIRE(a[6] == f.mean_scl);
    REQUIRE(a[7] == f.scr_rate_per_min);
    REQUIRE(a[8] == f.ecg_mean);
    REQUIRE(a[9] == f.ecg_median);
    REQUIRE(a[10] == f.ecg_std);
    REQUIRE(a[11] == f.ecg_var);
    REQUIRE(a[12] == f.eda_mean);
    REQUIRE(a[13] == f.eda_median);
    REQUIRE(a[14] == f.eda_std);
    REQUIRE(a[15] == f.eda_var);
    const FeatureVector g = FeatureVector::from_array(a);
    REQUIRE(g.to_array() == a);
    REQUIRE(std::string(FeatureVector::names[0]) == "bpm");
    REQUIRE(std::string(FeatureVector::names[15]) == "eda_var");
}
