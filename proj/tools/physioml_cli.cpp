// Command-line front end for the stress/arousal detection toolkit:
// synthesize corpora, extract chunk features, run the evaluation protocols,
// fit the mixed-effects regression, and merge report tables.
//
// Exit codes: 0 success, 2 input/config error, 3 protocol violation.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "physioml/corpus_io.hpp"
#include "physioml/eval.hpp"
#include "physioml/features.hpp"
#include "physioml/labels.hpp"
#include "physioml/lmm.hpp"
#include "physioml/report.hpp"
#include "physioml/rng.hpp"
#include "physioml/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace physioml;

namespace {

constexpr const char* kDemoConfig = R"JSON({
  "corpora": [
    {
      "name": "apd_like", "scheme": "SUDS", "participants": 10,
      "phases": [
        {"name": "baseline", "duration_s": 240, "arousal": 0.15},
        {"name": "anticipation", "duration_s": 240, "arousal": 0.45},
        {"name": "exposure", "duration_s": 240, "arousal": 0.85},
        {"name": "recovery", "duration_s": 240, "arousal": 0.35}
      ],
      "mean_hr_bpm": 56, "hr_arousal_gain_bpm": 32,
      "rsa_depth_ms": 14, "mayer_depth_ms": 16, "rr_jitter_ms": 14,
      "scr_base_rate_per_min": 1.8, "scr_arousal_gain_per_min": 1.5,
      "scl_base_us": 1.6, "scl_arousal_gain_us": 0.7,
      "noise_std": 0.03, "eda_noise_std_us": 0.003,
      "ecg_rate_hz": 200, "eda_rate_hz": 32,
      "hr_participant_spread_bpm": 3.0, "report_noise_frac": 0.09
    },
    {
      "name": "wesad_like", "scheme": "STAI6", "participants": 10,
      "phases": [
        {"name": "baseline", "duration_s": 240, "arousal": 0.20},
        {"name": "amusement", "duration_s": 240, "arousal": 0.50},
        {"name": "stress", "duration_s": 240, "arousal": 0.80},
        {"name": "meditation", "duration_s": 240, "arousal": 0.25}
      ],
      "mean_hr_bpm": 76, "hr_arousal_gain_bpm": 12,
      "rsa_depth_ms": 26, "mayer_depth_ms": 9, "rr_jitter_ms": 9,
      "scr_base_rate_per_min": 1.2, "scr_arousal_gain_per_min": 5.5,
      "scl_base_us": 3.6, "scl_arousal_gain_us": 2.2,
      "noise_std": 0.05, "eda_noise_std_us": 0.007,
      "ecg_rate_hz": 220, "eda_rate_hz": 40,
      "hr_participant_spread_bpm": 6.0, "report_noise_frac": 0.09
    },
    {
      "name": "case_like", "scheme": "AROUSAL_CONTINUOUS", "participants": 10,
      "phases": [
        {"name": "video_calm", "duration_s": 240, "arousal": 0.15},
        {"name": "video_fun", "duration_s": 240, "arousal": 0.55},
        {"name": "video_scary", "duration_s": 240, "arousal": 0.80},
        {"name": "video_boring", "duration_s": 240, "arousal": 0.25}
      ],
      "mean_hr_bpm": 68, "hr_arousal_gain_bpm": 20,
      "rsa_depth_ms": 24, "mayer_depth_ms": 10, "rr_jitter_ms": 11,
      "scr_base_rate_per_min": 2.0, "scr_arousal_gain_per_min": 3.2,
      "scl_base_us": 3.0, "scl_arousal_gain_us": 1.3,
      "noise_std": 0.04, "eda_noise_std_us": 0.008,
      "ecg_rate_hz": 180, "eda_rate_hz": 25,
      "hr_participant_spread_bpm": 4.5, "report_noise_frac": 0.09
    }
  ],
  "eval": {"outer_folds": 5, "inner_folds": 3, "smote_k": 5, "smote_trigger": 0.8}
})JSON";

constexpr const char* kSmokeConfig = R"JSON({
  "corpora": [
    {
      "name": "alpha", "scheme": "SUDS", "participants": 6,
      "phases": [
        {"name": "baseline", "duration_s": 240, "arousal": 0.10},
        {"name": "exposure", "duration_s": 240, "arousal": 0.90}
      ],
      "mean_hr_bpm": 62, "hr_arousal_gain_bpm": 26,
      "rsa_depth_ms": 18, "mayer_depth_ms": 14, "rr_jitter_ms": 12,
      "scr_base_rate_per_min": 2.0, "scr_arousal_gain_per_min": 4.0,
      "noise_std": 0.03, "ecg_rate_hz": 120, "eda_rate_hz": 20,
      "hr_participant_spread_bpm": 2.0, "report_noise_frac": 0.04
    },
    {
      "name": "beta", "scheme": "STAI6", "participants": 6,
      "phases": [
        {"name": "baseline", "duration_s": 240, "arousal": 0.15},
        {"name": "stress", "duration_s": 240, "arousal": 0.85}
      ],
      "mean_hr_bpm": 70, "hr_arousal_gain_bpm": 22,
      "rsa_depth_ms": 22, "mayer_depth_ms": 11, "rr_jitter_ms": 9,
      "scr_base_rate_per_min": 2.5, "scr_arousal_gain_per_min": 3.2,
      "noise_std": 0.04, "ecg_rate_hz": 125, "eda_rate_hz": 20,
      "hr_participant_spread_bpm": 2.5, "report_noise_frac": 0.04
    },
    {
      "name": "gamma", "scheme": "AROUSAL_CONTINUOUS", "participants": 6,
      "phases": [
        {"name": "calm", "duration_s": 240, "arousal": 0.12},
        {"name": "thrill", "duration_s": 240, "arousal": 0.88}
      ],
      "mean_hr_bpm": 66, "hr_arousal_gain_bpm": 24,
      "rsa_depth_ms": 20, "mayer_depth_ms": 12, "rr_jitter_ms": 10,
      "scr_base_rate_per_min": 2.2, "scr_arousal_gain_per_min": 3.6,
      "noise_std": 0.03, "ecg_rate_hz": 110, "eda_rate_hz": 20,
      "hr_participant_spread_bpm": 2.0, "report_noise_frac": 0.04
    }
  ],
  "eval": {
    "outer_folds": 5, "inner_folds": 3, "smote_k": 5, "smote_trigger": 0.8,
    "grid": {
      "svm": [{"c": 1.0, "gamma": 0.1}],
      "lgbm": [{"n_estimators": 40, "max_leaves": 15, "learning_rate": 0.1}],
      "rf": [{"n_estimators": 40, "max_depth": 5}],
      "xgb": [{"n_estimators": 40, "max_depth": 4, "learning_rate": 0.1}]
    }
  }
})JSON";

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case Errc::same_corpus:
        case Errc::held_out_not_found:
        case Errc::single_class_test:
            return 3;
        default:
            return 2;
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::missing_file, "config not found: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const std::exception& e) {
        throw Error(Errc::parse_error, "bad JSON in " + path + ": " + e.what());
    }
}

SynthConfig synth_from_json(const json& j) {
    SynthConfig cfg;
    cfg.corpus_name = j.value("name", cfg.corpus_name);
    if (j.contains("scheme")) {
        const auto s = parse_label_scheme(j.at("scheme").get<std::string>());
        if (!s) throw Error(Errc::invalid_config, "unknown scheme in synth config");
        cfg.label_scheme = *s;
    }
    cfg.n_participants = j.value("participants", cfg.n_participants);
    if (j.contains("phases")) {
        cfg.phases.clear();
        for (const auto& p : j.at("phases")) {
            cfg.phases.push_back({p.at("name").get<std::string>(), p.at("duration_s").get<double>(),
                                  p.value("arousal", 0.0)});
        }
    }
    cfg.mean_hr_bpm = j.value("mean_hr_bpm", cfg.mean_hr_bpm);
    cfg.hr_arousal_gain_bpm = j.value("hr_arousal_gain_bpm", cfg.hr_arousal_gain_bpm);
    cfg.rsa_depth_ms = j.value("rsa_depth_ms", cfg.rsa_depth_ms);
    cfg.mayer_depth_ms = j.value("mayer_depth_ms", cfg.mayer_depth_ms);
    cfg.scr_base_rate_per_min = j.value("scr_base_rate_per_min", cfg.scr_base_rate_per_min);
    cfg.scr_arousal_gain_per_min = j.value("scr_arousal_gain_per_min", cfg.scr_arousal_gain_per_min);
    cfg.noise_std = j.value("noise_std", cfg.noise_std);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.ecg_rate_hz = j.value("ecg_rate_hz", cfg.ecg_rate_hz);
    cfg.eda_rate_hz = j.value("eda_rate_hz", cfg.eda_rate_hz);
    cfg.rr_jitter_ms = j.value("rr_jitter_ms", cfg.rr_jitter_ms);
    cfg.eda_noise_std_us = j.value("eda_noise_std_us", cfg.eda_noise_std_us);
    cfg.scl_base_us = j.value("scl_base_us", cfg.scl_base_us);
    cfg.scl_arousal_gain_us = j.value("scl_arousal_gain_us", cfg.scl_arousal_gain_us);
    cfg.scl_drift_us_per_min = j.value("scl_drift_us_per_min", cfg.scl_drift_us_per_min);
    cfg.scr_amp_lo_us = j.value("scr_amp_lo_us", cfg.scr_amp_lo_us);
    cfg.scr_amp_hi_us = j.value("scr_amp_hi_us", cfg.scr_amp_hi_us);
    cfg.hr_participant_spread_bpm = j.value("hr_participant_spread_bpm", cfg.hr_participant_spread_bpm);
    cfg.report_noise_frac = j.value("report_noise_frac", cfg.report_noise_frac);
    return cfg;
}

Hyperparams hyperparams_from_json(const json& j) {
    Hyperparams hp;
    hp.c = j.value("c", hp.c);
    hp.gamma = j.value("gamma", hp.gamma);
    hp.n_estimators = j.value("n_estimators", hp.n_estimators);
    hp.max_depth = j.value("max_depth", hp.max_depth);
    hp.max_leaves = j.value("max_leaves", hp.max_leaves);
    hp.learning_rate = j.value("learning_rate", hp.learning_rate);
    return hp;
}

EvalConfig eval_config_from_json(const json& j, int jobs) {
    EvalConfig cfg;
    cfg.jobs = jobs;
    cfg.outer_folds = j.value("outer_folds", cfg.outer_folds);
    cfg.inner_folds = j.value("inner_folds", cfg.inner_folds);
    cfg.smote_k = j.value("smote_k", cfg.smote_k);
    cfg.smote_trigger = j.value("smote_trigger", cfg.smote_trigger);
    if (j.value("ensemble", "mean") == std::string("vote")) {
        cfg.ensemble_mode = EnsembleMode::majority_vote;
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        auto read_cells = [&](const char* key, std::vector<Hyperparams>& out) {
            if (!g.contains(key)) return;
            out.clear();
            for (const auto& cell : g.at(key)) out.push_back(hyperparams_from_json(cell));
            if (out.empty()) throw Error(Errc::empty_grid, std::string("empty grid for ") + key);
        };
        read_cells("svm", cfg.grid.svm);
        read_cells("lgbm", cfg.grid.lgbm);
        read_cells("rf", cfg.grid.rf);
        read_cells("xgb", cfg.grid.xgb);
    }
    return cfg;
}

std::string resolve_out(std::string out) {
    if (!out.empty()) return out;
    if (const char* env = std::getenv("PHYSIOML_OUT")) return env;
    return ".";
}

void write_text_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error(Errc::io_error, "cannot write " + path.string());
    f << content;
    if (!f) throw Error(Errc::io_error, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

std::vector<std::string> run_synth(const json& config, const std::string& out_dir,
                                   std::optional<std::uint64_t> master_seed) {
    if (!config.contains("corpora") || !config.at("corpora").is_array() ||
        config.at("corpora").empty()) {
        throw Error(Errc::invalid_config, "synth config needs a non-empty 'corpora' array");
    }
    std::vector<std::string> manifests;
    std::size_t idx = 0;
    for (const auto& cj : config.at("corpora")) {
        SynthConfig cfg = synth_from_json(cj);
        if (master_seed) cfg.seed = mix_seed(*master_seed, idx);
        auto [corpus, truth] = synth_corpus(cfg);
        const fs::path dir = fs::path(out_dir) / corpus.name;
        fs::create_directories(dir);
        manifests.push_back(export_corpus(corpus, &truth, dir.string()));
        ++idx;
    }
    return manifests;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
    const json config = load_json_file(config_path);
    for (const auto& m : run_synth(config, out_dir, seed)) std::cout << m << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

int cmd_extract(const std::string& manifest, const std::string& out_csv, const WindowSpec& wspec,
                const ChunkSpec& cspec, bool boundary_high) {
    const Corpus corpus = load_corpus(manifest);
    ExtractStats stats;
    const auto samples = extract_samples(corpus, wspec, cspec, boundary_high, &stats);
    fs::create_directories(fs::path(out_csv).parent_path().empty()
                               ? fs::path(".")
                               : fs::path(out_csv).parent_path());
    write_samples_csv(out_csv, samples);
    if (stats.skipped_windows > 0) {
        std::cerr << "warning: skipped " << stats.skipped_windows << " windows with unusable beats\n";
    }
    if (stats.short_phases > 0) {
        std::cerr << "warning: " << stats.short_phases << " phases too short for windowing/chunking\n";
    }
    std::cout << out_csv << " (" << samples.size() << " samples)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

void write_report_files(const fs::path& out_dir, const std::string& stem,
                        std::span<const EvalReport> reports) {
    write_text_file(out_dir / (stem + ".txt"), render_text(reports));
    write_text_file(out_dir / (stem + ".csv"), render_csv(reports));
    std::cout << (out_dir / (stem + ".txt")).string() << "\n";
}

std::vector<Sample> load_features(const std::string& path) { return read_samples_csv(path); }

int cmd_eval_within(const std::string& features, std::string corpus, std::uint64_t seed,
                    const std::string& out_dir, const EvalConfig& cfg) {
    auto samples = load_features(features);
    if (corpus.empty()) {
        if (samples.empty()) throw Error(Errc::empty_input, "no samples in " + features);
        corpus = samples[0].corpus_name;
    }
    std::vector<Sample> filtered;
    for (auto& s : samples) {
        if (s.corpus_name == corpus) filtered.push_back(std::move(s));
    }
    const auto report = within_corpus(filtered, corpus, seed, cfg);
    write_report_files(resolve_out(out_dir), "within_" + corpus, std::vector<EvalReport>{report});
    return 0;
}

int cmd_eval_cross(const std::string& train_file, const std::string& test_file, std::uint64_t seed,
                   const std::string& out_dir, const EvalConfig& cfg) {
    const auto train_samples = load_features(train_file);
    const auto test_samples = load_features(test_file);
    const auto report = cross_corpus(train_samples, test_samples, seed, cfg);
    std::string stem = "cross";
    if (!train_samples.empty() && !test_samples.empty()) {
        stem += "_" + train_samples[0].corpus_name + "_" + test_samples[0].corpus_name;
    }
    write_report_files(resolve_out(out_dir), stem, std::vector<EvalReport>{report});
    return 0;
}

int cmd_eval_loco(const std::vector<std::string>& feature_files, const std::string& held_out,
                  std::uint64_t seed, const std::string& out_dir, const EvalConfig& cfg) {
    std::vector<Sample> all;
    for (const auto& f : feature_files) {
        auto s = load_features(f);
        all.insert(all.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
    const auto report = loco(all, held_out, seed, cfg);
    write_report_files(resolve_out(out_dir), "loco_" + held_out, std::vector<EvalReport>{report});
    return 0;
}

// ---------------------------------------------------------------------------
// regress
// ---------------------------------------------------------------------------

/// Exact-duplicate feature columns make the design rank deficient; name them
/// up front so the failure is actionable.
std::vector<std::pair<std::string, std::string>> duplicate_columns(std::span<const Sample> samples) {
    std::vector<std::pair<std::string, std::string>> dups;
    for (std::size_t a = 0; a < FeatureVector::size; ++a) {
        for (std::size_t b = a + 1; b < FeatureVector::size; ++b) {
            bool equal = true;
            for (const auto& s : samples) {
                const auto arr = s.features.to_array();
                if (arr[a] != arr[b]) {
                    equal = false;
                    break;
                }
            }
            if (equal) dups.emplace_back(FeatureVector::names[a], FeatureVector::names[b]);
        }
    }
    return dups;
}

int cmd_regress(const std::vector<std::string>& feature_files, const std::string& out_dir,
                bool standardize) {
    std::vector<std::string> names;
    std::vector<LmmFit> fits;
    for (const auto& file : feature_files) {
        const auto samples = load_features(file);
        if (samples.empty()) throw Error(Errc::empty_input, "no samples in " + file);
        const auto dups = duplicate_columns(samples);
        if (!dups.empty()) {
            std::string msg = "rank-deficient design in " + file + ": duplicated columns";
            for (const auto& [a, b] : dups) msg += " (" + a + ", " + b + ")";
            throw Error(Errc::rank_deficient, msg);
        }
        std::vector<Sample> rows(samples.begin(), samples.end());
        if (standardize) {
            const auto ns = normalize_fit(rows);
            rows = normalize_apply(ns, rows);
        }
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        std::vector<std::string> groups;
        for (const auto& s : rows) {
            const auto a = s.features.to_array();
            x.emplace_back(a.begin(), a.end());
            y.push_back(static_cast<double>(s.label));
            groups.push_back(s.participant_id);
        }
        fits.push_back(fit_lmm(x, y, groups));
        names.push_back(samples[0].corpus_name);
    }
    const fs::path out(resolve_out(out_dir));
    write_text_file(out / "regression.txt", render_lmm_report(names, fits));

    json jout;
    for (std::size_t ci = 0; ci < names.size(); ++ci) {
        json corpus;
        corpus["r2_conditional"] = fits[ci].r2_conditional;
        corpus["r2_marginal"] = fits[ci].r2_marginal;
        corpus["sigma_b2"] = fits[ci].sigma_b2;
        corpus["sigma_e2"] = fits[ci].sigma_e2;
        json coefs;
        for (std::size_t f = 0; f < FeatureVector::size; ++f) {
            coefs[FeatureVector::names[f]] = {{"coef", fits[ci].beta[f + 1]},
                                              {"p", fits[ci].p_values[f + 1]},
                                              {"significant", fits[ci].p_values[f + 1] < 0.1}};
        }
        corpus["coefficients"] = std::move(coefs);
        jout[names[ci]] = std::move(corpus);
    }
    write_text_file(out / "regression.json", jout.dump(1) + "\n");
    std::cout << (out / "regression.txt").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report (merge)
// ---------------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path) {
    std::vector<EvalReport> reports;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw Error(Errc::missing_file, "report not found: " + path);
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        for (auto& r : parse_report_csv(text)) reports.push_back(std::move(r));
    }
    const std::string text = render_text(reports);
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        write_text_file(out_path, text);
        write_text_file(fs::path(out_path).replace_extension(".csv"), render_csv(reports));
        std::cout << out_path << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// demo: the full synthetic experiment in one command
// ---------------------------------------------------------------------------

int cmd_demo(const std::string& config_path, const std::string& profile, const std::string& out_dir,
             std::uint64_t seed, int jobs) {
    json config;
    if (!config_path.empty()) {
        config = load_json_file(config_path);
    } else if (profile == "smoke") {
        config = json::parse(kSmokeConfig);
    } else {
        config = json::parse(kDemoConfig);
    }
    const fs::path out(resolve_out(out_dir));
    fs::create_directories(out);

    // 1. Synthesize and export the corpora.
    const auto manifests = run_synth(config, (out / "corpora").string(), seed);

    // 2. Extract chunk features per corpus.
    std::vector<std::string> names;
    std::vector<std::string> feature_files;
    std::vector<std::vector<Sample>> per_corpus;
    for (const auto& manifest : manifests) {
        const Corpus corpus = load_corpus(manifest);
        ExtractStats stats;
        const auto samples = extract_samples(corpus, WindowSpec{}, ChunkSpec{}, true, &stats);
        const std::string fpath = (out / "features" / (corpus.name + ".csv")).string();
        fs::create_directories(out / "features");
        write_samples_csv(fpath, samples);
        if (stats.skipped_windows > 0) {
            std::cerr << "warning: " << corpus.name << ": skipped " << stats.skipped_windows
                      << " windows\n";
        }
        names.push_back(corpus.name);
        feature_files.push_back(fpath);
        per_corpus.push_back(read_samples_csv(fpath));
    }

    const EvalConfig cfg = eval_config_from_json(config.value("eval", json::object()), jobs);
    json summary;
    summary["seed"] = seed;
    summary["corpora"] = names;
    auto rows_to_json = [](const EvalReport& r) {
        json j;
        for (const auto& row : r.rows) j[row.model] = {{"acc", row.acc}, {"auc", row.auc}};
        return j;
    };

    // 3. Protocols: within per corpus, cross per ordered pair, LOCO per
    //    held-out corpus.
    std::vector<EvalReport> within_reports;
    for (std::size_t i = 0; i < per_corpus.size(); ++i) {
        const auto report = within_corpus(per_corpus[i], names[i], mix_seed(seed, 100 + i), cfg);
        summary["within"][names[i]] = rows_to_json(report);
        within_reports.push_back(report);
        std::cout << "within " << names[i] << " done\n";
    }
    write_report_files(out / "reports", "within_all", within_reports);

    std::vector<EvalReport> cross_reports;
    std::size_t pair_idx = 0;
    for (std::size_t a = 0; a < per_corpus.size(); ++a) {
        for (std::size_t b = 0; b < per_corpus.size(); ++b) {
            if (a == b) continue;
            const auto report =
                cross_corpus(per_corpus[a], per_corpus[b], mix_seed(seed, 200 + pair_idx), cfg);
            summary["cross"][names[a] + "->" + names[b]] = rows_to_json(report);
            cross_reports.push_back(report);
            std::cout << "cross " << names[a] << "->" << names[b] << " done\n";
            ++pair_idx;
        }
    }
    write_report_files(out / "reports", "cross_all", cross_reports);

    std::vector<EvalReport> loco_reports;
    if (per_corpus.size() == 3) {
        std::vector<Sample> all;
        for (const auto& c : per_corpus) all.insert(all.end(), c.begin(), c.end());
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto report = loco(all, names[i], mix_seed(seed, 300 + i), cfg);
            summary["loco"][names[i]] = rows_to_json(report);
            loco_reports.push_back(report);
            std::cout << "loco hold_out=" << names[i] << " done\n";
        }
        write_report_files(out / "reports", "loco_all", loco_reports);
    }

    // 4. Mixed-effects regression across all corpora.
    cmd_regress(feature_files, (out / "reports").string(), true);

    write_text_file(out / "summary.json", summary.dump(1) + "\n");
    std::cout << (out / "summary.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"physioml: ECG/EDA stress and arousal detection pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir, manifest, out_csv, features_file, train_file, test_file;
    std::string corpus_name, held_out, profile = "full", report_out;
    std::vector<std::string> feature_files, report_inputs;
    std::uint64_t seed = 42;
    bool seed_given = false;
    int jobs = 1;
    bool boundary_low = false, no_standardize = false;
    WindowSpec wspec;
    ChunkSpec cspec;

    auto* synth = app.add_subcommand("synth", "Generate synthetic corpora from a config");
    synth->add_option("--config", config_path, "Synth config JSON")->required();
    synth->add_option("--out", out_dir, "Output directory");
    synth->add_option("--seed", seed, "Master seed override")->each([&](const std::string&) {
        seed_given = true;
    });

    auto* extract = app.add_subcommand("extract", "Extract chunk features from a corpus");
    extract->add_option("--manifest", manifest, "Corpus manifest path")->required();
    extract->add_option("--out", out_csv, "Output feature CSV")->required();
    extract->add_option("--window-length", wspec.length_s, "Window length in seconds");
    extract->add_option("--window-step", wspec.step_s, "Window step in seconds");
    extract->add_option("--chunk-length", cspec.chunk_length_s, "Chunk length in seconds");
    extract->add_flag("--boundary-low", boundary_low, "Map threshold-boundary scores to class 0");

    auto* eval_cmd = app.add_subcommand("eval", "Run an evaluation protocol");
    eval_cmd->require_subcommand(1);
    auto add_eval_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Eval config JSON");
        sub->add_option("--seed", seed, "Master seed");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--jobs", jobs, "Worker threads");
    };
    auto* within_cmd = eval_cmd->add_subcommand("within", "Within-corpus 5-fold CV");
    within_cmd->add_option("--features", features_file, "Feature CSV")->required();
    within_cmd->add_option("--corpus", corpus_name, "Corpus name (default: from file)");
    add_eval_common(within_cmd);
    auto* cross_cmd = eval_cmd->add_subcommand("cross", "Train on one corpus, test on another");
    cross_cmd->add_option("--train", train_file, "Training feature CSV")->required();
    cross_cmd->add_option("--test", test_file, "Test feature CSV")->required();
    add_eval_common(cross_cmd);
    auto* loco_cmd = eval_cmd->add_subcommand("loco", "Leave one corpus out");
    loco_cmd->add_option("--features", feature_files, "Three feature CSVs")->required()->expected(3);
    loco_cmd->add_option("--hold-out", held_out, "Held-out corpus name")->required();
    add_eval_common(loco_cmd);

    auto* regress = app.add_subcommand("regress", "Mixed-effects regression report");
    regress->add_option("--features", feature_files, "Feature CSVs (one per corpus)")->required();
    regress->add_option("--out", out_dir, "Output directory");
    regress->add_flag("--no-standardize", no_standardize, "Skip z-scoring before the fit");

    auto* report_cmd = app.add_subcommand("report", "Merge eval CSVs into one table");
    report_cmd->add_option("--inputs", report_inputs, "Eval report CSVs")->required();
    report_cmd->add_option("--out", report_out, "Output path ('-' for stdout)");

    auto* demo = app.add_subcommand("demo", "Run the full synthetic experiment");
    demo->add_option("--config", config_path, "Demo config JSON (default: bundled)");
    demo->add_option("--profile", profile, "Bundled config: full or smoke")
        ->check(CLI::IsMember({"full", "smoke"}));
    demo->add_option("--out", out_dir, "Output directory");
    demo->add_option("--seed", seed, "Master seed");
    demo->add_option("--jobs", jobs, "Worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return cmd_synth(config_path, resolve_out(out_dir),
                             seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt);
        }
        if (extract->parsed()) {
            return cmd_extract(manifest, out_csv, wspec, cspec, !boundary_low);
        }
        if (eval_cmd->parsed()) {
            const json cfg_json =
                config_path.empty() ? json::object() : load_json_file(config_path);
            const EvalConfig cfg = eval_config_from_json(
                cfg_json.contains("eval") ? cfg_json.at("eval") : cfg_json, jobs);
            if (within_cmd->parsed()) {
                return cmd_eval_within(features_file, corpus_name, seed, out_dir, cfg);
            }
            if (cross_cmd->parsed()) {
                return cmd_eval_cross(train_file, test_file, seed, out_dir, cfg);
            }
            return cmd_eval_loco(feature_files, held_out, seed, out_dir, cfg);
        }
        if (regress->parsed()) {
            return cmd_regress(feature_files, out_dir, !no_standardize);
        }
        if (report_cmd->parsed()) {
            return cmd_report(report_inputs, report_out);
        }
        if (demo->parsed()) {
            return cmd_demo(config_path, profile, out_dir, seed, jobs);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
