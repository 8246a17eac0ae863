#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/fft.hpp"
#include "physioml/signal.hpp"
#include "physioml/stats.hpp"

namespace physioml {

// ---------------------------------------------------------------------------
// Zero-phase IIR filtering (Butterworth cascades run forward-backward)
// ---------------------------------------------------------------------------

/// One second-order section, a0 normalized to 1.
struct Biquad {
    double b0, b1, b2, a1, a2;
};

namespace detail {

/// Prototype Butterworth poles on the unit circle, left half-plane.
inline std::vector<std::complex<double>> butterworth_prototype(int order) {
    std::vector<std::complex<double>> poles;
    poles.reserve(static_cast<std::size_t>(order));
    const double pi = 3.1415926535897932384626433832795;
    for (int k = 0; k < order; ++k) {
        const double theta = pi * (2.0 * k + order + 1.0) / (2.0 * order);
        poles.emplace_back(std::cos(theta), std::sin(theta));
    }
    return poles;
}

inline std::complex<double> bilinear_pole(std::complex<double> analog, double fs2) {
    return (fs2 + analog) / (fs2 - analog);
}

/// Response of one biquad at e^{i omega}.
inline std::complex<double> biquad_response(const Biquad& s, double omega) {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

}  // namespace detail

/// Digital Butterworth low-pass of even order as second-order sections,
/// unity gain at DC.
inline std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double rate_hz) {
    if (order < 2 || order % 2 != 0) throw Error(Errc::invalid_config, "low-pass order must be even and >= 2");
    if (!(cutoff_hz > 0.0) || cutoff_hz >= 0.5 * rate_hz) {
        throw Error(Errc::invalid_config, "low-pass cutoff must lie in (0, rate/2)");
    }
    const double pi = 3.1415926535897932384626433832795;
    const double fs2 = 2.0 * rate_hz;
    const double wc = fs2 * std::tan(pi * cutoff_hz / rate_hz);
    const auto proto = detail::butterworth_prototype(order);
    std::vector<Biquad> sos;
    // Conjugate pole pairs: prototype index k pairs with order-1-k.
    for (int k = 0; k < order / 2; ++k) {
        const std::complex<double> zp = detail::bilinear_pole(wc * proto[static_cast<std::size_t>(k)], fs2);
        Biquad s{};
        s.a1 = -2.0 * zp.real();
        s.a2 = std::norm(zp);
        const double g = (1.0 + s.a1 + s.a2) / 4.0;  // unity DC gain, zeros at z = -1
        s.b0 = g;
        s.b1 = 2.0 * g;
        s.b2 = g;
        sos.push_back(s);
    }
    return sos;
}

/// Digital Butterworth band-pass built from `pairs` prototype poles
/// (total order 2*pairs), unity gain at the warped center frequency.
inline std::vector<Biquad> butterworth_bandpass(int pairs, double lo_hz, double hi_hz, double rate_hz) {
    if (pairs < 1) throw Error(Errc::invalid_config, "band-pass needs at least one pole pair");
    if (!(lo_hz > 0.0) || !(hi_hz > lo_hz) || hi_hz >= 0.5 * rate_hz) {
        throw Error(Errc::invalid_config, "band edges must satisfy 0 < lo < hi < rate/2");
    }
    const double pi = 3.1415926535897932384626433832795;
    const double fs2 = 2.0 * rate_hz;
    const double w1 = fs2 * std::tan(pi * lo_hz / rate_hz);
    const double w2 = fs2 * std::tan(pi * hi_hz / rate_hz);
    const double bw = w2 - w1;
    const double w0sq = w1 * w2;
    const auto proto = detail::butterworth_prototype(pairs);
    // Each prototype pole p yields two analog poles, the roots of
    // s^2 - bw*p*s + w0^2 = 0. Sections pair each root with its conjugate.
    std::vector<Biquad> sos;
    for (int k = 0; k < pairs; ++k) {
        const std::complex<double> bp = bw * proto[static_cast<std::size_t>(k)];
        const std::complex<double> disc = std::sqrt(bp * bp * 0.25 - w0sq);
        for (const std::complex<double> root : {bp * 0.5 + disc, bp * 0.5 - disc}) {
            const std::complex<double> zp = detail::bilinear_pole(root, fs2);
            Biquad s{};
            s.a1 = -2.0 * zp.real();
            s.a2 = std::norm(zp);
            s.b0 = 1.0;
            s.b1 = 0.0;
            s.b2 = -1.0;  // zeros at z = 1 and z = -1
            sos.push_back(s);
        }
    }
    // Normalize overall gain to 1 at the geometric center.
    const double f_center = rate_hz / pi * std::atan(std::sqrt(w0sq) / fs2);
    const double omega0 = 2.0 * pi * f_center / rate_hz;
    for (auto& s : sos) {
        const double mag = std::abs(detail::biquad_response(s, omega0));
        s.b0 /= mag;
        s.b1 /= mag;
        s.b2 /= mag;
    }
    return sos;
}

namespace detail {

/// Direct-form II transposed pass over one section, state preinitialized to
/// the steady-state response for a constant input x0.
inline void biquad_pass(const Biquad& s, std::vector<double>& x, double x0) {
    const double h1 = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    double z1 = x0 * (h1 - s.b0);
    double z2 = x0 * (s.b2 - s.a2 * h1);
    for (double& v : x) {
        const double in = v;
        const double out = s.b0 * in + z1;
        z1 = s.b1 * in - s.a1 * out + z2;
        z2 = s.b2 * in - s.a2 * out;
        v = out;
    }
}

}  // namespace detail

/// Forward-backward filtering over a second-order-section cascade with
/// odd-reflection padding, so the result has zero phase and no start-up
/// transient on steps or ramps.
inline std::vector<double> filtfilt(const std::vector<Biquad>& sos, std::span<const double> x,
                                    std::size_t padlen) {
    const std::size_t n = x.size();
    if (n < 2) return std::vector<double>(x.begin(), x.end());
    padlen = std::min(padlen, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (std::size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * x[0] - x[padlen - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    for (const auto& s : sos) detail::biquad_pass(s, ext, ext.front());
    std::reverse(ext.begin(), ext.end());
    for (const auto& s : sos) detail::biquad_pass(s, ext, ext.front());
    std::reverse(ext.begin(), ext.end());

    return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(padlen),
                               ext.begin() + static_cast<std::ptrdiff_t>(padlen + n));
}

// ---------------------------------------------------------------------------
// ECG conditioning and R-peak detection
// ---------------------------------------------------------------------------

/// R-peak times relative to trace start. Gaps respect a 200 ms refractory.
struct BeatSeries {
    std::vector<double> beat_times_s;
    double duration_s = 0.0;
};

/// RR intervals in ms; anchor_times_s marks the end of each interval.
struct RrSeries {
    std::vector<double> rr_ms;
    std::vector<double> anchor_times_s;
};

struct EdaDecomposition {
    SignalTrace tonic;   // SCL
    SignalTrace phasic;  // SCR component; tonic + phasic reconstructs the input
};

struct ScrEvent {
    double onset_s = 0.0;
    double peak_s = 0.0;
    double amplitude_us = 0.0;
};

/// Zero-phase 3-45 Hz band-pass; removes baseline wander and mains-adjacent
/// noise while keeping the QRS complex intact.
inline SignalTrace filter_ecg(const SignalTrace& trace) {
    if (trace.modality != Modality::ecg) throw Error(Errc::wrong_modality, "filter_ecg expects an ECG trace");
    validate_trace(trace);
    if (trace.duration_s() < 10.0) throw Error(Errc::too_short, "ECG shorter than 10 s");
    const auto sos = butterworth_bandpass(2, 3.0, 45.0, trace.sampling_rate_hz);
    const std::size_t padlen = static_cast<std::size_t>(std::lround(trace.sampling_rate_hz));  // 1 s
    SignalTrace out;
    out.samples = filtfilt(sos, trace.samples, padlen);
    out.sampling_rate_hz = trace.sampling_rate_hz;
    out.modality = Modality::ecg;
    return out;
}

namespace detail {

struct PanTompkinsStages {
    std::vector<double> mwi;
    std::size_t mwi_window = 0;
};

inline PanTompkinsStages pan_tompkins_transform(const std::vector<double>& x, double fs) {
    const std::size_t n = x.size();
    std::vector<double> sq(n, 0.0);
    // Five-point derivative, then squaring.
    for (std::size_t i = 4; i < n; ++i) {
        const double d = (2.0 * x[i] + x[i - 1] - x[i - 3] - 2.0 * x[i - 4]) / 8.0;
        sq[i] = d * d;
    }
    PanTompkinsStages st;
    st.mwi_window = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.150 * fs)));
    st.mwi.assign(n, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += sq[i];
        if (i >= st.mwi_window) acc -= sq[i - st.mwi_window];
        st.mwi[i] = acc / static_cast<double>(st.mwi_window);
    }
    return st;
}

}  // namespace detail

/// Pan-Tompkins style QRS detection on a filtered ECG trace: derivative,
/// squaring, 150 ms moving-window integration, adaptive threshold with a
/// 200 ms refractory and a missed-beat search-back, then refinement to the
/// local maximum of the filtered signal within +-50 ms.
inline BeatSeries detect_r_peaks(const SignalTrace& filtered) {
    if (filtered.duration_s() < 10.0) throw Error(Errc::too_short, "ECG shorter than 10 s");
    const double fs = filtered.sampling_rate_hz;
    const std::vector<double>& x = filtered.samples;
    const std::size_t n = x.size();
    const auto st = detail::pan_tompkins_transform(x, fs);
    const std::vector<double>& mwi = st.mwi;

    const std::size_t refractory = static_cast<std::size_t>(std::lround(0.200 * fs));
    const std::size_t half_search = static_cast<std::size_t>(std::lround(0.050 * fs));
    const std::size_t fiducial_lag = st.mwi_window / 2 + 2;  // MWI centroid + derivative delay

    // Local maxima of the integrated signal. One QRS produces a cluster of
    // maxima, so chains closer than the refractory collapse to the largest.
    std::vector<std::size_t> maxima;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1] && mwi[i] > 0.0) maxima.push_back(i);
    }
    if (maxima.empty()) throw Error(Errc::no_beats_found, "no QRS candidates");
    const std::size_t max_extent = 2 * st.mwi_window;
    std::vector<std::size_t> cands;
    {
        std::size_t group_start = maxima[0];
        std::size_t best = maxima[0];
        for (std::size_t mi = 1; mi <= maxima.size(); ++mi) {
            const bool close = mi < maxima.size() && maxima[mi] - maxima[mi - 1] < refractory &&
                               maxima[mi] - group_start < max_extent;
            if (close) {
                if (mwi[maxima[mi]] > mwi[best]) best = maxima[mi];
                continue;
            }
            cands.push_back(best);
            if (mi < maxima.size()) {
                group_start = maxima[mi];
                best = maxima[mi];
            }
        }
    }

    // Threshold state seeded from the first two seconds.
    const std::size_t warmup = std::min(n, static_cast<std::size_t>(std::lround(2.0 * fs)));
    double peak_est = 0.0, noise_est = 0.0;
    for (std::size_t i = 0; i < warmup; ++i) {
        peak_est = std::max(peak_est, mwi[i]);
        noise_est += mwi[i];
    }
    noise_est /= static_cast<double>(warmup);
    double spki = 0.5 * peak_est;
    double npki = 0.5 * noise_est;

    auto refine = [&](std::size_t cand) -> std::size_t {
        const std::size_t center = cand > fiducial_lag ? cand - fiducial_lag : 0;
        const std::size_t lo = center > half_search ? center - half_search : 0;
        const std::size_t hi = std::min(n - 1, center + half_search);
        std::size_t best = lo;
        for (std::size_t i = lo + 1; i <= hi; ++i) {
            if (x[i] > x[best]) best = i;
        }
        return best;
    };

    std::vector<std::size_t> accepted_cands;
    std::vector<double> recent_rr;
    auto avg_rr = [&]() -> double {
        if (recent_rr.empty()) return 0.0;
        double s = 0.0;
        for (double v : recent_rr) s += v;
        return s / static_cast<double>(recent_rr.size());
    };

    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
        const std::size_t c = cands[ci];
        if (!accepted_cands.empty() && c < accepted_cands.back() + refractory) continue;
        const double threshold = npki + 0.25 * (spki - npki);
        if (mwi[c] > threshold) {
            if (!accepted_cands.empty()) {
                const double rr = static_cast<double>(c - accepted_cands.back()) / fs;
                recent_rr.push_back(rr);
                if (recent_rr.size() > 8) recent_rr.erase(recent_rr.begin());
            }
            accepted_cands.push_back(c);
            spki = 0.125 * mwi[c] + 0.875 * spki;
        } else {
            npki = 0.125 * mwi[c] + 0.875 * npki;
            // Search-back: if the expected beat is overdue, retry the gap at
            // half threshold.
            const double arr = avg_rr();
            if (!accepted_cands.empty() && arr > 0.0 &&
                static_cast<double>(c - accepted_cands.back()) / fs > 1.66 * arr) {
                std::size_t best = 0;
                double best_v = 0.5 * threshold;
                for (std::size_t cj = ci;; --cj) {
                    const std::size_t cc = cands[cj];
                    if (cc < accepted_cands.back() + refractory) break;
                    if (mwi[cc] > best_v) {
                        best_v = mwi[cc];
                        best = cc;
                    }
                    if (cj == 0) break;
                }
                if (best != 0) {
                    const double rr = static_cast<double>(best - accepted_cands.back()) / fs;
                    recent_rr.push_back(rr);
                    if (recent_rr.size() > 8) recent_rr.erase(recent_rr.begin());
                    accepted_cands.push_back(best);
                    spki = 0.25 * mwi[best] + 0.75 * spki;
                    std::sort(accepted_cands.begin(), accepted_cands.end());
                }
            }
        }
    }

    BeatSeries beats;
    beats.duration_s = filtered.duration_s();
    for (std::size_t c : accepted_cands) {
        const double t = static_cast<double>(refine(c)) / fs;
        if (!beats.beat_times_s.empty() && t - beats.beat_times_s.back() < 0.2) continue;
        beats.beat_times_s.push_back(t);
    }
    if (beats.beat_times_s.size() < 2) throw Error(Errc::no_beats_found, "fewer than 2 beats detected");
    return beats;
}

/// RR construction with physiological artifact rejection: intervals outside
/// [lo_ms, hi_ms] are dropped along with their anchors.
inline RrSeries to_rr(const BeatSeries& beats, double lo_ms = 300.0, double hi_ms = 2000.0) {
    if (beats.beat_times_s.size() < 3) throw Error(Errc::too_few_beats, "need at least 3 beats");
    RrSeries rr;
    for (std::size_t i = 1; i < beats.beat_times_s.size(); ++i) {
        const double v = (beats.beat_times_s[i] - beats.beat_times_s[i - 1]) * 1000.0;
        if (v < lo_ms || v > hi_ms) continue;
        rr.rr_ms.push_back(v);
        rr.anchor_times_s.push_back(beats.beat_times_s[i]);
    }
    return rr;
}

/// Spectral power of the RR series over [f_lo, f_hi) Hz in ms^2: linear
/// interpolation to a uniform 4 Hz grid, mean removal, Hann window, FFT
/// periodogram, rectangle-rule integral of the one-sided density.
inline double band_power(const RrSeries& rr, double f_lo, double f_hi) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || f_hi > 2.0) {
        throw Error(Errc::invalid_config, "band must lie within (0, 2) Hz");
    }
    if (rr.rr_ms.size() < 2 || rr.anchor_times_s.back() - rr.anchor_times_s.front() < 30.0) {
        throw Error(Errc::span_too_short, "RR series spans less than 30 s");
    }
    const double resample_hz = 4.0;
    const double t0 = rr.anchor_times_s.front();
    const double span = rr.anchor_times_s.back() - t0;
    const std::size_t n = static_cast<std::size_t>(std::floor(span * resample_hz)) + 1;

    std::vector<double> u(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t0 + static_cast<double>(i) / resample_hz;
        while (k + 1 < rr.anchor_times_s.size() && rr.anchor_times_s[k + 1] < t) ++k;
        if (k + 1 >= rr.anchor_times_s.size()) {
            u[i] = rr.rr_ms.back();
        } else {
            const double ta = rr.anchor_times_s[k], tb = rr.anchor_times_s[k + 1];
            const double w = tb > ta ? (t - ta) / (tb - ta) : 0.0;
            u[i] = rr.rr_ms[k] + w * (rr.rr_ms[k + 1] - rr.rr_ms[k]);
        }
    }

    const double m = mean(u);
    double wsum_sq = 0.0;
    const double pi = 3.1415926535897932384626433832795;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = n > 1 ? 0.5 * (1.0 - std::cos(2.0 * pi * static_cast<double>(i) /
                                                       static_cast<double>(n - 1)))
                               : 1.0;
        u[i] = (u[i] - m) * w;
        wsum_sq += w * w;
    }

    const std::size_t nfft = next_pow2(n);
    std::vector<std::complex<double>> spec(nfft, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) spec[i] = {u[i], 0.0};
    fft_radix2(spec);

    const double df = resample_hz / static_cast<double>(nfft);
    const double scale = 1.0 / (resample_hz * wsum_sq);  // one-sided density, x2 below
    double power = 0.0;
    for (std::size_t i = 1; i <= nfft / 2; ++i) {
        const double f = df * static_cast<double>(i);
        if (f < f_lo || f >= f_hi) continue;
        const double one_sided = (i == nfft / 2) ? 1.0 : 2.0;
        power += one_sided * std::norm(spec[i]) * scale * df;
    }
    return power;
}

/// Zero-phase 1 Hz low-pass for EDA conditioning.
inline SignalTrace filter_eda(const SignalTrace& trace) {
    if (trace.modality != Modality::eda) throw Error(Errc::wrong_modality, "filter_eda expects an EDA trace");
    validate_trace(trace);
    if (trace.duration_s() < 10.0) throw Error(Errc::too_short, "EDA shorter than 10 s");
    const auto sos = butterworth_lowpass(2, 1.0, trace.sampling_rate_hz);
    const std::size_t padlen = static_cast<std::size_t>(std::lround(3.0 * trace.sampling_rate_hz));
    SignalTrace out;
    out.samples = filtfilt(sos, trace.samples, padlen);
    out.sampling_rate_hz = trace.sampling_rate_hz;
    out.modality = Modality::eda;
    return out;
}

/// Tonic/phasic split: tonic is a zero-phase 0.05 Hz low-pass of the filtered
/// signal, phasic the remainder, so the two reconstruct the input sample-wise.
inline EdaDecomposition decompose_eda(const SignalTrace& filtered) {
    if (filtered.modality != Modality::eda) throw Error(Errc::wrong_modality, "decompose_eda expects EDA");
    if (filtered.duration_s() < 30.0) throw Error(Errc::too_short, "EDA shorter than 30 s");
    const auto sos = butterworth_lowpass(4, 0.05, filtered.sampling_rate_hz);
    // Long pad: the tonic filter has a ~20 s time constant.
    const std::size_t padlen = static_cast<std::size_t>(std::lround(30.0 * filtered.sampling_rate_hz));
    EdaDecomposition d;
    d.tonic.samples = filtfilt(sos, filtered.samples, padlen);
    d.tonic.sampling_rate_hz = filtered.sampling_rate_hz;
    d.tonic.modality = Modality::eda;
    d.phasic.samples.resize(filtered.samples.size());
    for (std::size_t i = 0; i < filtered.samples.size(); ++i) {
        d.phasic.samples[i] = filtered.samples[i] - d.tonic.samples[i];
    }
    d.phasic.sampling_rate_hz = filtered.sampling_rate_hz;
    d.phasic.modality = Modality::eda;
    return d;
}

/// Trough-to-peak SCR search on the phasic component. Keeps events with
/// amplitude >= 0.01 uS and rise time <= 5 s, sorted by onset.
inline std::vector<ScrEvent> detect_scr(const SignalTrace& phasic,
                                        double min_amplitude_us = 0.01,
                                        double max_rise_s = 5.0) {
    const std::vector<double>& x = phasic.samples;
    const double fs = phasic.sampling_rate_hz;
    std::vector<ScrEvent> events;
    if (x.size() < 3) return events;

    std::ptrdiff_t last_trough = -1;
    int prev_sign = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double d = x[i] - x[i - 1];
        const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (sign == 0) continue;  // plateaus carry the previous trend
        if (prev_sign <= 0 && sign > 0) {
            last_trough = static_cast<std::ptrdiff_t>(i - 1);
        } else if (prev_sign > 0 && sign < 0 && last_trough >= 0) {
            const std::size_t peak = i - 1;
            const std::size_t trough = static_cast<std::size_t>(last_trough);
            const double amp = x[peak] - x[trough];
            const double rise = static_cast<double>(peak - trough) / fs;
            if (amp >= min_amplitude_us && rise <= max_rise_s) {
                events.push_back({static_cast<double>(trough) / fs, static_cast<double>(peak) / fs, amp});
            }
        }
        prev_sign = sign;
    }
    return events;
}

}  // namespace physioml
