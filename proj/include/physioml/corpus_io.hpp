#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "physioml/error.hpp"
#include "physioml/signal.hpp"
#include "physioml/synth.hpp"

namespace physioml {

// Canonical on-disk corpus layout: one line-oriented manifest plus one
// two-column CSV per trace. Users convert restricted source datasets into
// this format themselves.
//
//   corpus <name>
//   scheme <SUDS|STAI6|AROUSAL_CONTINUOUS>
//   participant <id>
//   phase <name> ecg=<path> ecg_rate=<hz> eda=<path> eda_rate=<hz>
//         report=<scheme>:<scalar or comma-separated series>
//   (the phase directive is a single line; it is wrapped here for width)
//
// Paths are resolved relative to the manifest. Trace CSVs carry a
// "time_s,value" header, monotone time, and a constant step of 1/rate
// (validated to 1e-6 s).

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& s, std::size_t lineno, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw Error(Errc::parse_error, "bad " + what + " '" + s + "' at line " + std::to_string(lineno),
                    lineno);
    }
}

inline std::vector<double> read_trace_csv(const std::filesystem::path& path, double expected_rate_hz) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::missing_file, "trace file not found: " + path.string());
    std::string line;
    if (!std::getline(in, line) || (line != "time_s,value" && line != "time_s,value\r")) {
        throw Error(Errc::parse_error, "expected 'time_s,value' header in " + path.string(), 1);
    }
    std::vector<double> values;
    const double step = 1.0 / expected_rate_hz;
    double prev_t = 0.0;
    bool have_prev = false;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw Error(Errc::parse_error, "missing comma in " + path.string() + " line " +
                                               std::to_string(lineno), lineno);
        }
        const double t = parse_double(line.substr(0, comma), lineno, "time");
        const double v = parse_double(line.substr(comma + 1), lineno, "value");
        if (have_prev) {
            if (t <= prev_t) {
                throw Error(Errc::parse_error, "time not increasing in " + path.string() + " line " +
                                                   std::to_string(lineno), lineno);
            }
            if (std::fabs((t - prev_t) - step) > 1e-6) {
                throw Error(Errc::parse_error, "time step deviates from 1/rate in " + path.string() +
                                                   " line " + std::to_string(lineno), lineno);
            }
        }
        prev_t = t;
        have_prev = true;
        values.push_back(v);
    }
    return values;
}

inline RawReport parse_report_field(const std::string& field, std::size_t lineno) {
    const auto colon = field.find(':');
    if (colon == std::string::npos) {
        throw Error(Errc::parse_error, "report needs a <scheme>:<value> form at line " +
                                           std::to_string(lineno), lineno);
    }
    const auto scheme = parse_label_scheme(field.substr(0, colon));
    if (!scheme) {
        throw Error(Errc::parse_error, "unknown report scheme at line " + std::to_string(lineno), lineno);
    }
    RawReport r;
    r.scheme = *scheme;
    const std::string payload = field.substr(colon + 1);
    if (*scheme == LabelScheme::arousal_continuous) {
        std::vector<double> series;
        std::stringstream ss(payload);
        std::string cell;
        while (std::getline(ss, cell, ',')) series.push_back(parse_double(cell, lineno, "arousal value"));
        r.series = std::move(series);
    } else {
        r.scalar_score = parse_double(payload, lineno, "report score");
    }
    return r;
}

inline std::string sanitize_token(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
    return out.empty() ? std::string("x") : out;
}

}  // namespace detail

/// Loads a corpus from its manifest. Signals come back raw (unfiltered);
/// every signal_model invariant is validated at the boundary.
inline Corpus load_corpus(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    const fs::path mpath(manifest_path);
    std::ifstream in(mpath);
    if (!in) throw Error(Errc::missing_file, "manifest not found: " + manifest_path);
    const fs::path base = mpath.has_parent_path() ? mpath.parent_path() : fs::path(".");

    Corpus corpus;
    bool have_scheme = false;
    std::string participant;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto toks = detail::split_ws(line);
        if (toks[0] == "corpus") {
            if (toks.size() != 2) throw Error(Errc::parse_error, "corpus line needs a name", lineno);
            corpus.name = toks[1];
        } else if (toks[0] == "scheme") {
            if (toks.size() != 2) throw Error(Errc::parse_error, "scheme line needs a value", lineno);
            const auto s = parse_label_scheme(toks[1]);
            if (!s) throw Error(Errc::parse_error, "unknown scheme '" + toks[1] + "'", lineno);
            corpus.label_scheme = *s;
            have_scheme = true;
        } else if (toks[0] == "participant") {
            if (toks.size() != 2) throw Error(Errc::parse_error, "participant line needs an id", lineno);
            participant = toks[1];
        } else if (toks[0] == "phase") {
            if (!have_scheme) throw Error(Errc::parse_error, "phase before scheme declaration", lineno);
            if (participant.empty()) {
                throw Error(Errc::parse_error, "phase before any participant declaration", lineno);
            }
            if (toks.size() < 2) throw Error(Errc::parse_error, "phase line needs a name", lineno);
            std::map<std::string, std::string> kv;
            for (std::size_t i = 2; i < toks.size(); ++i) {
                const auto eq = toks[i].find('=');
                if (eq == std::string::npos) {
                    throw Error(Errc::parse_error, "expected key=value at line " + std::to_string(lineno),
                                lineno);
                }
                kv[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
            }
            for (const char* req : {"ecg", "eda", "report"}) {
                if (!kv.count(req)) {
                    throw Error(Errc::parse_error, std::string("phase line missing '") + req +
                                                       "' at line " + std::to_string(lineno), lineno);
                }
            }
            if (!kv.count("ecg_rate") || !kv.count("eda_rate")) {
                throw Error(Errc::rate_missing, "sampling rate missing at line " + std::to_string(lineno),
                            lineno);
            }
            PhaseRecord rec;
            rec.participant_id = participant;
            rec.phase_name = toks[1];
            const double ecg_rate = detail::parse_double(kv["ecg_rate"], lineno, "ecg_rate");
            const double eda_rate = detail::parse_double(kv["eda_rate"], lineno, "eda_rate");
            if (ecg_rate <= 0.0 || eda_rate <= 0.0) {
                throw Error(Errc::non_positive_rate, "rates must be positive at line " +
                                                         std::to_string(lineno), lineno);
            }
            rec.ecg = SignalTrace{detail::read_trace_csv(base / kv["ecg"], ecg_rate), ecg_rate,
                                  Modality::ecg};
            rec.eda = SignalTrace{detail::read_trace_csv(base / kv["eda"], eda_rate), eda_rate,
                                  Modality::eda};
            rec.self_report = detail::parse_report_field(kv["report"], lineno);
            if (rec.self_report.scheme != corpus.label_scheme) {
                throw Error(Errc::scheme_mismatch, "report scheme differs from corpus scheme at line " +
                                                       std::to_string(lineno), lineno);
            }
            corpus.phases.push_back(std::move(rec));
        } else {
            throw Error(Errc::parse_error, "unknown directive '" + toks[0] + "'", lineno);
        }
    }
    if (!have_scheme) throw Error(Errc::parse_error, "manifest lacks a scheme line", lineno);
    validate_corpus(corpus);
    return corpus;
}

namespace detail {

inline void write_trace_csv(const std::filesystem::path& path, const SignalTrace& trace) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
    out << "time_s,value\n";
    char buf[64];
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9f,%.17g\n",
                      static_cast<double>(i) / trace.sampling_rate_hz, trace.samples[i]);
        out << buf;
    }
    if (!out) throw Error(Errc::io_error, "failed writing " + path.string());
}

inline std::string format_report_field(const RawReport& r) {
    char buf[32];
    std::string out = to_string(r.scheme);
    out += ':';
    if (r.scheme == LabelScheme::arousal_continuous) {
        for (std::size_t i = 0; i < r.series->size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", (*r.series)[i]);
            if (i) out += ',';
            out += buf;
        }
    } else {
        std::snprintf(buf, sizeof(buf), "%.17g", *r.scalar_score);
        out += buf;
    }
    return out;
}

}  // namespace detail

/// Writes the ground-truth sidecar next to an exported corpus.
inline void write_ground_truth(const std::string& path, const GroundTruth& truth) {
    nlohmann::json j;
    j["phases"] = nlohmann::json::array();
    for (const auto& pt : truth.phases) {
        nlohmann::json p;
        p["participant"] = pt.participant_id;
        p["phase"] = pt.phase_name;
        p["beat_times_s"] = pt.beat_times_s;
        p["rr_ms"] = pt.rr_ms;
        nlohmann::json events = nlohmann::json::array();
        for (const auto& ev : pt.scr_events) {
            events.push_back({{"onset_s", ev.onset_s}, {"peak_s", ev.peak_s},
                              {"amplitude_us", ev.amplitude_us}});
        }
        p["scr_events"] = std::move(events);
        p["tonic_level0_us"] = pt.tonic_level0_us;
        p["tonic_slope_us_per_s"] = pt.tonic_slope_us_per_s;
        p["arousal"] = pt.arousal;
        p["label"] = pt.label;
        j["phases"].push_back(std::move(p));
    }
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_error, "cannot write " + path);
    out << j.dump(1) << '\n';
}

inline GroundTruth read_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::missing_file, "ground truth not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(Errc::parse_error, "bad ground truth JSON: " + std::string(e.what()));
    }
    GroundTruth truth;
    for (const auto& p : j.at("phases")) {
        PhaseTruth pt;
        pt.participant_id = p.at("participant").get<std::string>();
        pt.phase_name = p.at("phase").get<std::string>();
        pt.beat_times_s = p.at("beat_times_s").get<std::vector<double>>();
        pt.rr_ms = p.at("rr_ms").get<std::vector<double>>();
        for (const auto& ev : p.at("scr_events")) {
            pt.scr_events.push_back({ev.at("onset_s").get<double>(), ev.at("peak_s").get<double>(),
                                     ev.at("amplitude_us").get<double>()});
        }
        pt.tonic_level0_us = p.at("tonic_level0_us").get<double>();
        pt.tonic_slope_us_per_s = p.at("tonic_slope_us_per_s").get<double>();
        pt.arousal = p.at("arousal").get<double>();
        pt.label = p.at("label").get<int>();
        truth.phases.push_back(std::move(pt));
    }
    return truth;
}

/// Writes a corpus in the canonical format. load_corpus(export_corpus(c))
/// reproduces the corpus sample-for-sample. Returns the manifest path.
inline std::string export_corpus(const Corpus& corpus, const GroundTruth* truth,
                                 const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "traces", ec);
    if (ec) throw Error(Errc::io_error, "cannot create " + dir + ": " + ec.message());

    auto check_token = [](const std::string& s, const char* what) {
        if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos) {
            throw Error(Errc::io_error, std::string(what) + " '" + s + "' is empty or contains whitespace");
        }
    };
    check_token(corpus.name, "corpus name");
    for (const auto& rec : corpus.phases) {
        check_token(rec.participant_id, "participant id");
        check_token(rec.phase_name, "phase name");
    }

    const fs::path mpath = fs::path(dir) / "manifest.txt";
    std::ofstream out(mpath);
    if (!out) throw Error(Errc::io_error, "cannot write " + mpath.string());
    out << "# physioml corpus manifest\n";
    out << "corpus " << corpus.name << "\n";
    out << "scheme " << to_string(corpus.label_scheme) << "\n";

    std::string current;
    std::map<std::string, int> phase_counter;
    char buf[64];
    for (const auto& rec : corpus.phases) {
        if (rec.participant_id != current) {
            current = rec.participant_id;
            out << "participant " << current << "\n";
        }
        const int k = phase_counter[rec.participant_id]++;
        const std::string stem = detail::sanitize_token(rec.participant_id) + "_" +
                                 std::to_string(k) + "_" + detail::sanitize_token(rec.phase_name);
        const std::string ecg_rel = "traces/" + stem + "_ecg.csv";
        const std::string eda_rel = "traces/" + stem + "_eda.csv";
        detail::write_trace_csv(fs::path(dir) / ecg_rel, rec.ecg);
        detail::write_trace_csv(fs::path(dir) / eda_rel, rec.eda);
        out << "phase " << rec.phase_name << " ecg=" << ecg_rel;
        std::snprintf(buf, sizeof(buf), " ecg_rate=%.17g", rec.ecg.sampling_rate_hz);
        out << buf << " eda=" << eda_rel;
        std::snprintf(buf, sizeof(buf), " eda_rate=%.17g", rec.eda.sampling_rate_hz);
        out << buf << " report=" << detail::format_report_field(rec.self_report) << "\n";
    }
    if (!out) throw Error(Errc::io_error, "failed writing " + mpath.string());
    out.close();
    if (truth) write_ground_truth((fs::path(dir) / "ground_truth.json").string(), *truth);
    return mpath.string();
}

}  // namespace physioml
