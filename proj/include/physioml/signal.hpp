#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/stats.hpp"

namespace physioml {

enum class Modality { ecg, eda };

enum class LabelScheme { suds, stai6, arousal_continuous };

inline const char* to_string(Modality m) { return m == Modality::ecg ? "ECG" : "EDA"; }

inline const char* to_string(LabelScheme s) {
    switch (s) {
        case LabelScheme::suds: return "SUDS";
        case LabelScheme::stai6: return "STAI6";
        default: return "AROUSAL_CONTINUOUS";
    }
}

inline std::optional<LabelScheme> parse_label_scheme(const std::string& s) {
    if (s == "SUDS") return LabelScheme::suds;
    if (s == "STAI6") return LabelScheme::stai6;
    if (s == "AROUSAL_CONTINUOUS") return LabelScheme::arousal_continuous;
    return std::nullopt;
}

/// Uniformly sampled physiological time series. Millivolts for ECG,
/// microsiemens for EDA. Immutable by convention after construction.
struct SignalTrace {
    std::vector<double> samples;
    double sampling_rate_hz = 0.0;
    Modality modality = Modality::ecg;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sampling_rate_hz;
    }
};

inline void validate_trace(const SignalTrace& t) {
    if (!(t.sampling_rate_hz > 0.0)) {
        throw Error(Errc::non_positive_rate, "sampling rate must be positive");
    }
    if (t.samples.empty()) {
        throw Error(Errc::empty_trace, "trace has no samples");
    }
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        if (!std::isfinite(t.samples[i])) {
            throw Error(Errc::non_finite, "non-finite sample at index " + std::to_string(i), i);
        }
    }
}

/// One raw self-report. Exactly one of scalar_score / series is present,
/// matching the scheme: SUDS and STAI6 are scalar, continuous arousal is a
/// joystick series on [1, 10].
struct RawReport {
    LabelScheme scheme = LabelScheme::suds;
    std::optional<double> scalar_score;
    std::optional<std::vector<double>> series;
};

inline void validate_report(const RawReport& r) {
    const bool continuous = r.scheme == LabelScheme::arousal_continuous;
    if (continuous) {
        if (!r.series || r.scalar_score) {
            throw Error(Errc::scheme_range_violation, "continuous arousal requires a series, not a scalar");
        }
        if (r.series->empty()) throw Error(Errc::scheme_range_violation, "arousal series is empty");
        for (double v : *r.series) {
            if (!(v >= 1.0 && v <= 10.0)) {
                throw Error(Errc::scheme_range_violation, "arousal value outside [1, 10]");
            }
        }
        return;
    }
    if (!r.scalar_score || r.series) {
        throw Error(Errc::scheme_range_violation, "scalar scheme requires a scalar score");
    }
    const double s = *r.scalar_score;
    if (r.scheme == LabelScheme::suds && !(s >= 0.0 && s <= 100.0)) {
        throw Error(Errc::scheme_range_violation, "SUDS score outside [0, 100]");
    }
    if (r.scheme == LabelScheme::stai6 && !(s >= 6.0 && s <= 24.0)) {
        throw Error(Errc::scheme_range_violation, "STAI6 score outside [6, 24]");
    }
}

/// One participant x experiment-phase unit. Holds exactly the ECG and EDA
/// traces the pipeline consumes, which realizes the at-least-one-of-each
/// invariant by construction.
struct PhaseRecord {
    std::string participant_id;
    std::string phase_name;
    SignalTrace ecg;
    SignalTrace eda;
    RawReport self_report;
};

inline void validate_phase(const PhaseRecord& p) {
    validate_trace(p.ecg);
    validate_trace(p.eda);
    if (p.ecg.modality != Modality::ecg) throw Error(Errc::wrong_modality, "ECG slot holds a non-ECG trace");
    if (p.eda.modality != Modality::eda) throw Error(Errc::wrong_modality, "EDA slot holds a non-EDA trace");
    validate_report(p.self_report);
    // Both traces must cover the same wall-clock phase.
    const double d_ecg = p.ecg.duration_s();
    const double d_eda = p.eda.duration_s();
    const double ref = std::max(d_ecg, d_eda);
    if (std::fabs(d_ecg - d_eda) > 0.01 * ref) {
        throw Error(Errc::length_mismatch, "ECG/EDA durations differ by more than 1% in phase '" +
                                               p.phase_name + "' of " + p.participant_id);
    }
}

struct Corpus {
    std::string name;
    LabelScheme label_scheme = LabelScheme::suds;
    std::vector<PhaseRecord> phases;
};

inline void validate_corpus(const Corpus& c) {
    for (const auto& p : c.phases) {
        validate_phase(p);
        if (p.self_report.scheme != c.label_scheme) {
            throw Error(Errc::scheme_mismatch, "phase '" + p.phase_name + "' of " + p.participant_id +
                                                   " uses a different label scheme than the corpus");
        }
    }
}

/// The 16 per-window features in canonical order. The order is fixed; report
/// rows and design-matrix columns index into it.
struct FeatureVector {
    double bpm = 0.0;
    double rmssd_ms = 0.0;
    double sdnn_ms = 0.0;
    double hf_rr = 0.0;
    double lf_rr = 0.0;
    double lf_hf_ratio = 0.0;
    double mean_scl = 0.0;
    double scr_rate_per_min = 0.0;
    double ecg_mean = 0.0;
    double ecg_median = 0.0;
    double ecg_std = 0.0;
    double ecg_var = 0.0;
    double eda_mean = 0.0;
    double eda_median = 0.0;
    double eda_std = 0.0;
    double eda_var = 0.0;

    static constexpr std::size_t size = 16;

    static constexpr std::array<const char*, 16> names = {
        "bpm",      "rmssd_ms",   "sdnn_ms",    "hf_rr",    "lf_rr",   "lf_hf_ratio",
        "mean_scl", "scr_rate_per_min",         "ecg_mean", "ecg_median",
        "ecg_std",  "ecg_var",    "eda_mean",   "eda_median", "eda_std", "eda_var"};

    std::array<double, 16> to_array() const {
        return {bpm,     rmssd_ms, sdnn_ms,  hf_rr,    lf_rr,    lf_hf_ratio, mean_scl, scr_rate_per_min,
                ecg_mean, ecg_median, ecg_std, ecg_var, eda_mean, eda_median, eda_std,  eda_var};
    }

    static FeatureVector from_array(const std::array<double, 16>& a) {
        FeatureVector f;
        f.bpm = a[0];
        f.rmssd_ms = a[1];
        f.sdnn_ms = a[2];
        f.hf_rr = a[3];
        f.lf_rr = a[4];
        f.lf_hf_ratio = a[5];
        f.mean_scl = a[6];
        f.scr_rate_per_min = a[7];
        f.ecg_mean = a[8];
        f.ecg_median = a[9];
        f.ecg_std = a[10];
        f.ecg_var = a[11];
        f.eda_mean = a[12];
        f.eda_median = a[13];
        f.eda_std = a[14];
        f.eda_var = a[15];
        return f;
    }
};

/// One model-ready data point: a 2-minute-chunk feature vector plus its
/// binary label and provenance.
struct Sample {
    FeatureVector features;
    int label = 0;
    std::string participant_id;
    std::string corpus_name;
    std::string phase_name;
    int chunk_index = 0;
};

}  // namespace physioml
