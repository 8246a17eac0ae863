#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "physioml/dsp.hpp"
#include "physioml/error.hpp"
#include "physioml/labels.hpp"
#include "physioml/signal.hpp"
#include "physioml/stats.hpp"

namespace physioml {

/// 60 s sliding windows advancing by 30 s, per the extraction protocol.
struct WindowSpec {
    double length_s = 60.0;
    double step_s = 30.0;
};

/// Phases are cut into 2-minute chunks; one chunk becomes one model sample.
struct ChunkSpec {
    double chunk_length_s = 120.0;
};

struct Window {
    double start_s = 0.0;
    double end_s = 0.0;
};

/// Window starts at 0, step, 2*step, ...; only windows fully inside the
/// phase are kept.
inline std::vector<Window> sliding_windows(double duration_s, const WindowSpec& spec = {}) {
    if (!(spec.step_s > 0.0) || spec.step_s > spec.length_s) {
        throw Error(Errc::invalid_config, "window step must satisfy 0 < step <= length");
    }
    const double eps = 1e-9;
    if (duration_s + eps < spec.length_s) {
        throw Error(Errc::phase_too_short, "phase shorter than one window");
    }
    std::vector<Window> out;
    for (std::size_t k = 0;; ++k) {
        const double start = static_cast<double>(k) * spec.step_s;
        if (start + spec.length_s > duration_s + eps) break;
        out.push_back({start, start + spec.length_s});
    }
    return out;
}

inline std::vector<Window> sliding_windows(const PhaseRecord& phase, const WindowSpec& spec = {}) {
    return sliding_windows(std::min(phase.ecg.duration_s(), phase.eda.duration_s()), spec);
}

struct HrvTimeDomain {
    double bpm = 0.0;
    double rmssd_ms = 0.0;
    double sdnn_ms = 0.0;
};

/// Time-domain HRV: bpm = 60000 / mean(rr), rmssd = sqrt(mean(diff(rr)^2)),
/// sdnn = sample standard deviation of rr (N-1 divisor).
inline HrvTimeDomain hrv_time_domain(std::span<const double> rr_ms) {
    if (rr_ms.size() < 3) throw Error(Errc::insufficient_beats, "need at least 3 RR intervals");
    HrvTimeDomain h;
    h.bpm = 60000.0 / mean(rr_ms);
    double acc = 0.0;
    for (std::size_t i = 1; i < rr_ms.size(); ++i) {
        const double d = rr_ms[i] - rr_ms[i - 1];
        acc += d * d;
    }
    h.rmssd_ms = std::sqrt(acc / static_cast<double>(rr_ms.size() - 1));
    h.sdnn_ms = sample_stddev(rr_ms);
    return h;
}

struct EcgFeatures {
    double bpm = 0.0;
    double rmssd_ms = 0.0;
    double sdnn_ms = 0.0;
    double hf_rr = 0.0;
    double lf_rr = 0.0;
    double lf_hf_ratio = 0.0;
};

/// Full ECG feature set for one window's RR series. The spectral half needs
/// a 30 s anchor span; an all-zero HF band leaves the ratio undefined.
inline EcgFeatures ecg_features(const RrSeries& rr) {
    const auto td = hrv_time_domain(rr.rr_ms);
    EcgFeatures f;
    f.bpm = td.bpm;
    f.rmssd_ms = td.rmssd_ms;
    f.sdnn_ms = td.sdnn_ms;
    f.hf_rr = band_power(rr, 0.15, 0.4);
    f.lf_rr = band_power(rr, 0.04, 0.15);
    if (f.hf_rr <= 0.0) throw Error(Errc::degenerate_spectrum, "HF power is zero; LF/HF undefined");
    f.lf_hf_ratio = f.lf_rr / f.hf_rr;
    return f;
}

struct EdaFeatures {
    double mean_scl = 0.0;
    double scr_rate_per_min = 0.0;
};

/// Mean tonic level over [start, end) plus the SCR onset rate per minute.
inline EdaFeatures eda_features(const SignalTrace& tonic, std::span<const ScrEvent> events,
                                double start_s, double end_s) {
    if (!(end_s > start_s)) throw Error(Errc::too_short, "empty EDA window");
    const double fs = tonic.sampling_rate_hz;
    const std::size_t lo = static_cast<std::size_t>(std::ceil(start_s * fs - 1e-9));
    const std::size_t hi = std::min(tonic.samples.size(), static_cast<std::size_t>(std::ceil(end_s * fs - 1e-9)));
    if (lo >= hi) throw Error(Errc::too_short, "EDA window contains no samples");
    EdaFeatures f;
    f.mean_scl = mean(std::span<const double>(tonic.samples).subspan(lo, hi - lo));
    std::size_t count = 0;
    for (const auto& ev : events) {
        if (ev.onset_s >= start_s && ev.onset_s < end_s) ++count;
    }
    f.scr_rate_per_min = 60.0 * static_cast<double>(count) / (end_s - start_s);
    return f;
}

struct StatFeatures {
    double mean = 0.0;
    double median = 0.0;
    double std = 0.0;
    double var = 0.0;
};

/// Sample statistics of one window (N-1 divisor; a single value has
/// variance 0 rather than being an error).
inline StatFeatures stat_features(std::span<const double> x) {
    if (x.empty()) throw Error(Errc::empty_input, "stat_features of empty window");
    StatFeatures s;
    s.mean = physioml::mean(x);
    s.median = physioml::median(x);
    s.var = sample_variance(x);
    s.std = std::sqrt(s.var);
    return s;
}

struct WindowFeatures {
    double start_s = 0.0;
    FeatureVector features;
};

struct PhaseExtraction {
    std::vector<WindowFeatures> windows;
    std::size_t skipped_windows = 0;
};

/// Runs the DSP pipeline once over a phase, then assembles the 16 features
/// per sliding window. Windows without enough usable beats are skipped and
/// counted, not fatal.
inline PhaseExtraction extract_phase_features(const PhaseRecord& phase, const WindowSpec& wspec = {}) {
    const auto windows = sliding_windows(phase, wspec);
    PhaseExtraction out;

    const SignalTrace ecg = filter_ecg(phase.ecg);
    const SignalTrace eda = filter_eda(phase.eda);
    const EdaDecomposition decomp = decompose_eda(eda);
    const auto scr_events = detect_scr(decomp.phasic);

    RrSeries rr;
    try {
        rr = to_rr(detect_r_peaks(ecg));
    } catch (const Error&) {
        out.skipped_windows = windows.size();
        return out;  // no usable beats anywhere in the phase
    }

    for (const auto& w : windows) {
        RrSeries sub;
        for (std::size_t i = 0; i < rr.anchor_times_s.size(); ++i) {
            if (rr.anchor_times_s[i] >= w.start_s && rr.anchor_times_s[i] < w.end_s) {
                sub.rr_ms.push_back(rr.rr_ms[i]);
                sub.anchor_times_s.push_back(rr.anchor_times_s[i]);
            }
        }
        EcgFeatures ef;
        try {
            ef = ecg_features(sub);
        } catch (const Error&) {
            ++out.skipped_windows;
            continue;
        }
        const auto edaf = eda_features(decomp.tonic, scr_events, w.start_s, w.end_s);

        const double ecg_fs = ecg.sampling_rate_hz;
        const std::size_t elo = static_cast<std::size_t>(std::ceil(w.start_s * ecg_fs - 1e-9));
        const std::size_t ehi = std::min(ecg.samples.size(),
                                         static_cast<std::size_t>(std::ceil(w.end_s * ecg_fs - 1e-9)));
        const auto ecg_stats = stat_features(std::span<const double>(ecg.samples).subspan(elo, ehi - elo));

        const double eda_fs = eda.sampling_rate_hz;
        const std::size_t dlo = static_cast<std::size_t>(std::ceil(w.start_s * eda_fs - 1e-9));
        const std::size_t dhi = std::min(eda.samples.size(),
                                         static_cast<std::size_t>(std::ceil(w.end_s * eda_fs - 1e-9)));
        const auto eda_stats = stat_features(std::span<const double>(eda.samples).subspan(dlo, dhi - dlo));

        FeatureVector f;
        f.bpm = ef.bpm;
        f.rmssd_ms = ef.rmssd_ms;
        f.sdnn_ms = ef.sdnn_ms;
        f.hf_rr = ef.hf_rr;
        f.lf_rr = ef.lf_rr;
        f.lf_hf_ratio = ef.lf_hf_ratio;
        f.mean_scl = edaf.mean_scl;
        f.scr_rate_per_min = edaf.scr_rate_per_min;
        f.ecg_mean = ecg_stats.mean;
        f.ecg_median = ecg_stats.median;
        f.ecg_std = ecg_stats.std;
        f.ecg_var = ecg_stats.var;
        f.eda_mean = eda_stats.mean;
        f.eda_median = eda_stats.median;
        f.eda_std = eda_stats.std;
        f.eda_var = eda_stats.var;
        out.windows.push_back({w.start_s, f});
    }
    return out;
}

struct ChunkFeatures {
    int chunk_index = 0;
    FeatureVector features;
};

/// Chunk k covers [k*chunk_length, (k+1)*chunk_length) and must lie fully
/// inside the phase; a window belongs to the chunk containing its start.
/// The chunk feature is the element-wise mean of its member windows; chunks
/// without a complete member window are dropped.
inline std::vector<ChunkFeatures> aggregate_chunks(std::span<const WindowFeatures> windows,
                                                   const ChunkSpec& cspec, double phase_duration_s) {
    if (windows.empty()) throw Error(Errc::empty_input, "no windows to aggregate");
    if (!(cspec.chunk_length_s > 0.0)) throw Error(Errc::invalid_config, "chunk length must be positive");
    const std::size_t n_chunks =
        static_cast<std::size_t>(std::floor(phase_duration_s / cspec.chunk_length_s + 1e-9));
    std::vector<std::array<double, 16>> sums(n_chunks, std::array<double, 16>{});
    std::vector<std::size_t> counts(n_chunks, 0);
    for (const auto& w : windows) {
        const std::size_t k = static_cast<std::size_t>(std::floor(w.start_s / cspec.chunk_length_s + 1e-9));
        if (k >= n_chunks) continue;
        const auto a = w.features.to_array();
        for (std::size_t i = 0; i < 16; ++i) sums[k][i] += a[i];
        ++counts[k];
    }
    std::vector<ChunkFeatures> out;
    for (std::size_t k = 0; k < n_chunks; ++k) {
        if (counts[k] == 0) continue;
        std::array<double, 16> m{};
        for (std::size_t i = 0; i < 16; ++i) m[i] = sums[k][i] / static_cast<double>(counts[k]);
        out.push_back({static_cast<int>(k), FeatureVector::from_array(m)});
    }
    return out;
}

struct ExtractStats {
    std::size_t skipped_windows = 0;
    std::size_t short_phases = 0;
};

/// Corpus-level extraction: DSP + windows + chunks + labels, one Sample per
/// 2-minute chunk.
inline std::vector<Sample> extract_samples(const Corpus& corpus, const WindowSpec& wspec = {},
                                           const ChunkSpec& cspec = {}, bool boundary_high = true,
                                           ExtractStats* stats = nullptr) {
    const LabelRule rule = LabelRule::for_scheme(corpus.label_scheme, boundary_high);
    std::vector<Sample> samples;
    for (const auto& phase : corpus.phases) {
        const double duration = std::min(phase.ecg.duration_s(), phase.eda.duration_s());
        PhaseExtraction ex;
        try {
            ex = extract_phase_features(phase, wspec);
        } catch (const Error& e) {
            if (e.code() == Errc::phase_too_short) {
                if (stats) ++stats->short_phases;
                continue;
            }
            throw;
        }
        if (stats) stats->skipped_windows += ex.skipped_windows;
        if (ex.windows.empty()) continue;
        if (duration + 1e-9 < cspec.chunk_length_s) {
            if (stats) ++stats->short_phases;
            continue;
        }
        const int y = label(phase.self_report, rule);
        for (const auto& chunk : aggregate_chunks(ex.windows, cspec, duration)) {
            Sample s;
            s.features = chunk.features;
            s.label = y;
            s.participant_id = phase.participant_id;
            s.corpus_name = corpus.name;
            s.phase_name = phase.phase_name;
            s.chunk_index = chunk.chunk_index;
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

// ---------------------------------------------------------------------------
// Normalization (z-score with training statistics only)
// ---------------------------------------------------------------------------

struct NormStats {
    std::array<double, 16> mean{};
    std::array<double, 16> stddev{};
};

/// Per-feature mean and sample standard deviation of the training set.
inline NormStats normalize_fit(std::span<const Sample> train) {
    if (train.size() < 2) throw Error(Errc::too_few_samples, "normalization needs at least 2 samples");
    NormStats ns;
    for (const auto& s : train) {
        const auto a = s.features.to_array();
        for (std::size_t i = 0; i < 16; ++i) ns.mean[i] += a[i];
    }
    for (std::size_t i = 0; i < 16; ++i) ns.mean[i] /= static_cast<double>(train.size());
    for (const auto& s : train) {
        const auto a = s.features.to_array();
        for (std::size_t i = 0; i < 16; ++i) {
            const double d = a[i] - ns.mean[i];
            ns.stddev[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < 16; ++i) {
        ns.stddev[i] = std::sqrt(ns.stddev[i] / static_cast<double>(train.size() - 1));
    }
    return ns;
}

/// Applies training statistics unchanged; constant features map to 0.
inline std::vector<Sample> normalize_apply(const NormStats& ns, std::span<const Sample> samples) {
    std::vector<Sample> out(samples.begin(), samples.end());
    for (auto& s : out) {
        auto a = s.features.to_array();
        for (std::size_t i = 0; i < 16; ++i) {
            a[i] = ns.stddev[i] > 0.0 ? (a[i] - ns.mean[i]) / ns.stddev[i] : 0.0;
        }
        s.features = FeatureVector::from_array(a);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature matrix CSV: identity columns then the canonical 16 features
// ---------------------------------------------------------------------------

inline std::string samples_csv_header() {
    std::string h = "corpus,participant,phase,chunk,label";
    for (const char* name : FeatureVector::names) {
        h += ',';
        h += name;
    }
    return h;
}

inline void write_samples_csv(const std::string& path, std::span<const Sample> samples) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_error, "cannot open '" + path + "' for writing");
    out << samples_csv_header() << '\n';
    char buf[32];
    for (const auto& s : samples) {
        for (const std::string* id : {&s.corpus_name, &s.participant_id, &s.phase_name}) {
            if (id->find_first_of(",\n\"") != std::string::npos) {
                throw Error(Errc::io_error, "identifier contains a CSV delimiter: " + *id);
            }
        }
        out << s.corpus_name << ',' << s.participant_id << ',' << s.phase_name << ','
            << s.chunk_index << ',' << s.label;
        for (double v : s.features.to_array()) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw Error(Errc::io_error, "failed writing '" + path + "'");
}

inline std::vector<Sample> read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::missing_file, "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::parse_error, "empty feature file: " + path, 1);
    if (line != samples_csv_header()) {
        throw Error(Errc::parse_error, "unexpected feature CSV header in " + path, 1);
    }
    std::vector<Sample> samples;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5 + 16) {
            throw Error(Errc::parse_error, "expected 21 columns at line " + std::to_string(lineno), lineno);
        }
        Sample s;
        s.corpus_name = cells[0];
        s.participant_id = cells[1];
        s.phase_name = cells[2];
        try {
            s.chunk_index = std::stoi(cells[3]);
            s.label = std::stoi(cells[4]);
            std::array<double, 16> a{};
            for (std::size_t i = 0; i < 16; ++i) {
                std::size_t used = 0;
                a[i] = std::stod(cells[5 + i], &used);
                if (used != cells[5 + i].size()) throw std::invalid_argument("trailing junk");
            }
            s.features = FeatureVector::from_array(a);
        } catch (const std::exception&) {
            throw Error(Errc::parse_error, "bad value at line " + std::to_string(lineno), lineno);
        }
        if (s.label != 0 && s.label != 1) {
            throw Error(Errc::parse_error, "label must be 0 or 1 at line " + std::to_string(lineno), lineno);
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace physioml
