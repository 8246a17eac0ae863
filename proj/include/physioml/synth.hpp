#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "physioml/dsp.hpp"
#include "physioml/error.hpp"
#include "physioml/labels.hpp"
#include "physioml/rng.hpp"
#include "physioml/signal.hpp"

namespace physioml {

struct SynthPhaseSpec {
    std::string name;
    double duration_s = 300.0;
    double arousal = 0.0;  // latent driver in [0, 1]
};

/// Generator parameters for one synthetic corpus. The physiological fields
/// drive both signals from the same latent arousal level; the remaining knobs
/// default to values that produce clean desk-scale data.
struct SynthConfig {
    std::string corpus_name = "synth";
    LabelScheme label_scheme = LabelScheme::suds;
    int n_participants = 1;
    std::vector<SynthPhaseSpec> phases;

    double mean_hr_bpm = 65.0;
    double hr_arousal_gain_bpm = 25.0;  // bpm per unit arousal
    double rsa_depth_ms = 20.0;         // 0.3 Hz RR modulation amplitude
    double mayer_depth_ms = 15.0;       // 0.1 Hz RR modulation amplitude
    double scr_base_rate_per_min = 2.0;
    double scr_arousal_gain_per_min = 4.0;
    double noise_std = 0.0;  // additive ECG amplitude noise, mV
    std::uint64_t seed = 1;

    double ecg_rate_hz = 250.0;
    double eda_rate_hz = 50.0;
    double rr_jitter_ms = 0.0;  // Gaussian jitter per RR interval
    double eda_noise_std_us = 0.005;
    double scl_base_us = 2.0;
    double scl_arousal_gain_us = 1.5;
    double scl_drift_us_per_min = 0.05;
    double scr_amp_lo_us = 0.1;
    double scr_amp_hi_us = 0.5;
    double hr_participant_spread_bpm = 3.0;
    double report_noise_frac = 0.05;  // self-report noise as a fraction of scale range
};

/// Exact generation record for one phase: what a detector should recover.
struct PhaseTruth {
    std::string participant_id;
    std::string phase_name;
    std::vector<double> beat_times_s;
    std::vector<double> rr_ms;  // interval ending at beat_times_s[i + 1]
    std::vector<ScrEvent> scr_events;
    double tonic_level0_us = 0.0;
    double tonic_slope_us_per_s = 0.0;
    double arousal = 0.0;
    int label = 0;
};

/// Aligned one-to-one with Corpus.phases.
struct GroundTruth {
    std::vector<PhaseTruth> phases;
};

namespace detail {

inline void validate_synth_config(const SynthConfig& c) {
    auto fail = [](const std::string& what) { throw Error(Errc::invalid_config, what); };
    if (c.n_participants < 1) fail("n_participants must be >= 1");
    if (c.phases.empty()) fail("at least one phase is required");
    for (const auto& p : c.phases) {
        if (p.duration_s < 120.0) fail("phase '" + p.name + "' shorter than 120 s");
        if (p.arousal < 0.0 || p.arousal > 1.0) fail("arousal must lie in [0, 1]");
    }
    if (c.mean_hr_bpm <= 0.0) fail("mean_hr_bpm must be positive");
    if (c.hr_arousal_gain_bpm < 0.0 || c.scr_arousal_gain_per_min < 0.0) fail("gains must be >= 0");
    if (c.rsa_depth_ms < 0.0 || c.mayer_depth_ms < 0.0 || c.rr_jitter_ms < 0.0) fail("depths must be >= 0");
    if (c.scr_base_rate_per_min < 0.0) fail("scr_base_rate_per_min must be >= 0");
    if (c.noise_std < 0.0 || c.eda_noise_std_us < 0.0) fail("noise levels must be >= 0");
    if (c.ecg_rate_hz <= 90.0) fail("ecg_rate_hz must exceed 90 Hz for the 3-45 Hz band-pass");
    if (c.eda_rate_hz <= 2.0) fail("eda_rate_hz must exceed 2 Hz");
    if (c.scr_amp_lo_us > c.scr_amp_hi_us || c.scr_amp_lo_us < 0.05) {
        fail("SCR amplitudes must satisfy 0.05 <= lo <= hi");
    }
}

/// Fixed QRS-like template: P, Q, R, S, T as Gaussian bumps; the R maximum
/// sits exactly at dt = 0.
inline double ecg_template(double dt) {
    struct Bump {
        double amp, center, width;
    };
    static constexpr Bump bumps[] = {
        {0.12, -0.200, 0.035},   // P
        {-0.15, -0.030, 0.008},  // Q
        {1.00, 0.000, 0.010},    // R
        {-0.25, 0.030, 0.008},   // S
        {0.35, 0.220, 0.050},    // T
    };
    double v = 0.0;
    for (const auto& b : bumps) {
        const double u = (dt - b.center) / b.width;
        v += b.amp * std::exp(-0.5 * u * u);
    }
    return v;
}

inline double bateman_peak_delay(double tau_rise, double tau_decay) {
    return std::log(tau_decay / tau_rise) * tau_rise * tau_decay / (tau_decay - tau_rise);
}

/// Bi-exponential SCR kernel normalized to unit peak.
inline double bateman_kernel(double t, double tau_rise, double tau_decay) {
    if (t <= 0.0) return 0.0;
    const double t_peak = bateman_peak_delay(tau_rise, tau_decay);
    const double norm = std::exp(-t_peak / tau_decay) - std::exp(-t_peak / tau_rise);
    return (std::exp(-t / tau_decay) - std::exp(-t / tau_rise)) / norm;
}

inline RawReport synth_report(LabelScheme scheme, double arousal, double noise_frac, Rng& rng,
                              double duration_s) {
    RawReport r;
    r.scheme = scheme;
    auto noisy = [&](double lo, double hi) {
        const double range = hi - lo;
        const double v = lo + range * arousal + range * noise_frac * rng.normal();
        return std::clamp(v, lo, hi);
    };
    if (scheme == LabelScheme::arousal_continuous) {
        const std::size_t n = std::max<std::size_t>(3, static_cast<std::size_t>(duration_s / 5.0));
        std::vector<double> series(n);
        for (auto& v : series) v = noisy(1.0, 10.0);
        r.series = std::move(series);
    } else if (scheme == LabelScheme::suds) {
        r.scalar_score = noisy(0.0, 100.0);
    } else {
        r.scalar_score = noisy(6.0, 24.0);
    }
    return r;
}

}  // namespace detail

/// Generates one corpus plus its exact ground truth. Identical configs
/// (including the seed) produce bit-identical output.
inline std::pair<Corpus, GroundTruth> synth_corpus(const SynthConfig& cfg) {
    detail::validate_synth_config(cfg);
    const double tau_rise = 0.75, tau_decay = 2.0;
    const double scr_peak_delay = detail::bateman_peak_delay(tau_rise, tau_decay);

    Corpus corpus;
    corpus.name = cfg.corpus_name;
    corpus.label_scheme = cfg.label_scheme;
    GroundTruth truth;
    const LabelRule rule = LabelRule::for_scheme(cfg.label_scheme);

    for (int pi = 0; pi < cfg.n_participants; ++pi) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(pi)));
        char pid[16];
        std::snprintf(pid, sizeof(pid), "p%03d", pi + 1);
        const double hr_offset = cfg.hr_participant_spread_bpm * rng.normal();
        const double scl_offset = 0.2 * cfg.scl_base_us * rng.normal();

        for (const auto& phase : cfg.phases) {
            PhaseRecord rec;
            rec.participant_id = pid;
            rec.phase_name = phase.name;
            PhaseTruth pt;
            pt.participant_id = pid;
            pt.phase_name = phase.name;
            pt.arousal = phase.arousal;

            // Beat times: RR modulated at the HF/LF band centers plus jitter.
            const double base_rr_ms =
                60000.0 / (cfg.mean_hr_bpm + hr_offset + cfg.hr_arousal_gain_bpm * phase.arousal);
            const double two_pi = 6.283185307179586476925286766559;
            double t = 0.3;
            pt.beat_times_s.push_back(t);
            while (true) {
                double rr = base_rr_ms + cfg.rsa_depth_ms * std::sin(two_pi * 0.3 * t) +
                            cfg.mayer_depth_ms * std::sin(two_pi * 0.1 * t);
                if (cfg.rr_jitter_ms > 0.0) rr += cfg.rr_jitter_ms * rng.normal();
                rr = std::clamp(rr, 300.0, 2000.0);
                const double t_next = t + rr / 1000.0;
                if (t_next >= phase.duration_s - 0.5) break;
                pt.beat_times_s.push_back(t_next);
                pt.rr_ms.push_back(rr);
                t = t_next;
            }

            // ECG: template train plus optional amplitude noise.
            const std::size_t n_ecg = static_cast<std::size_t>(phase.duration_s * cfg.ecg_rate_hz);
            std::vector<double> ecg(n_ecg, 0.0);
            const double half_support = 0.45;
            for (double beat : pt.beat_times_s) {
                const std::ptrdiff_t lo =
                    std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>((beat - half_support) * cfg.ecg_rate_hz));
                const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
                    static_cast<std::ptrdiff_t>(n_ecg) - 1,
                    static_cast<std::ptrdiff_t>((beat + half_support) * cfg.ecg_rate_hz) + 1);
                for (std::ptrdiff_t i = lo; i <= hi; ++i) {
                    ecg[static_cast<std::size_t>(i)] +=
                        detail::ecg_template(static_cast<double>(i) / cfg.ecg_rate_hz - beat);
                }
            }
            if (cfg.noise_std > 0.0) {
                for (auto& v : ecg) v += cfg.noise_std * rng.normal();
            }
            rec.ecg = SignalTrace{std::move(ecg), cfg.ecg_rate_hz, Modality::ecg};

            // EDA: tonic ramp plus Poisson SCR train plus optional noise.
            pt.tonic_level0_us = cfg.scl_base_us + scl_offset + cfg.scl_arousal_gain_us * phase.arousal;
            pt.tonic_slope_us_per_s = cfg.scl_drift_us_per_min / 60.0;
            const double rate_per_s =
                (cfg.scr_base_rate_per_min + cfg.scr_arousal_gain_per_min * phase.arousal) / 60.0;
            if (rate_per_s > 0.0) {
                double onset = rng.exponential(rate_per_s);
                while (onset < phase.duration_s) {
                    const double amp =
                        std::max(0.05, rng.uniform(cfg.scr_amp_lo_us, cfg.scr_amp_hi_us));
                    pt.scr_events.push_back({onset, onset + scr_peak_delay, amp});
                    onset += rng.exponential(rate_per_s);
                }
            }
            const std::size_t n_eda = static_cast<std::size_t>(phase.duration_s * cfg.eda_rate_hz);
            std::vector<double> eda(n_eda);
            for (std::size_t i = 0; i < n_eda; ++i) {
                const double ts = static_cast<double>(i) / cfg.eda_rate_hz;
                eda[i] = pt.tonic_level0_us + pt.tonic_slope_us_per_s * ts;
            }
            for (const auto& ev : pt.scr_events) {
                const std::size_t lo = static_cast<std::size_t>(std::max(0.0, ev.onset_s) * cfg.eda_rate_hz);
                for (std::size_t i = lo; i < n_eda; ++i) {
                    const double dt = static_cast<double>(i) / cfg.eda_rate_hz - ev.onset_s;
                    if (dt > 20.0) break;  // kernel support
                    eda[i] += ev.amplitude_us * detail::bateman_kernel(dt, tau_rise, tau_decay);
                }
            }
            if (cfg.eda_noise_std_us > 0.0) {
                for (auto& v : eda) v += cfg.eda_noise_std_us * rng.normal();
            }
            rec.eda = SignalTrace{std::move(eda), cfg.eda_rate_hz, Modality::eda};

            rec.self_report = detail::synth_report(cfg.label_scheme, phase.arousal,
                                                   cfg.report_noise_frac, rng, phase.duration_s);
            pt.label = label(rec.self_report, rule);

            corpus.phases.push_back(std::move(rec));
            truth.phases.push_back(std::move(pt));
        }
    }
    validate_corpus(corpus);
    return {std::move(corpus), std::move(truth)};
}

}  // namespace physioml
