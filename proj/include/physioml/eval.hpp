#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/features.hpp"
#include "physioml/folds.hpp"
#include "physioml/labels.hpp"
#include "physioml/metrics.hpp"
#include "physioml/ml/model.hpp"
#include "physioml/ml/smote.hpp"
#include "physioml/rng.hpp"

namespace physioml {

struct EvalRow {
    std::string model;
    double acc = 0.0;
    double auc = 0.0;
};

/// One protocol outcome shaped like a report-table column group: the Random
/// baseline plus the four classifiers and their ensemble.
struct EvalReport {
    std::string protocol;
    std::uint64_t seed = 0;
    std::vector<EvalRow> rows;
};

struct EvalConfig {
    GridSpec grid = GridSpec::defaults();
    int outer_folds = 5;
    int inner_folds = 3;
    int smote_k = 5;
    double smote_trigger = 0.8;  // SMOTE runs when minority/majority < trigger
    EnsembleMode ensemble_mode = EnsembleMode::mean_probability;
    int jobs = 1;
};

/// Everything trained from one train partition, exposed so tests can verify
/// that test data never influences the learned state.
struct FoldOutcome {
    NormStats norm;
    std::vector<TrainedModel> models;             // SVM, LGBM, RF, XGB
    std::array<std::vector<double>, 5> probs;     // + Ensemble, over test samples
    std::vector<int> labels;
};

/// Fits normalization, optional SMOTE, grid search, and the four models on
/// the train partition only, then scores the test partition.
inline FoldOutcome run_fold(std::span<const Sample> train_part, std::span<const Sample> test_part,
                            const EvalConfig& cfg, std::uint64_t seed) {
    FoldOutcome out;
    out.norm = normalize_fit(train_part);
    const auto train_n = normalize_apply(out.norm, train_part);
    const auto test_n = normalize_apply(out.norm, test_part);

    const auto balance = class_balance(train_n);
    std::vector<Sample> train_final = train_n;
    if (balance.minority_ratio < cfg.smote_trigger) {
        train_final = smote(train_n, cfg.smote_k, mix_seed(seed, 0x5307eULL));
    }

    for (std::size_t ki = 0; ki < 4; ++ki) {
        const ClassifierKind kind = all_classifier_kinds[ki];
        Hyperparams hp;
        if (cfg.grid.for_kind(kind).size() == 1) {
            hp = cfg.grid.for_kind(kind)[0];
        } else {
            // Inner CV stays participant-grouped, so it runs on the
            // pre-SMOTE training samples.
            hp = grid_search(kind, train_n, cfg.grid, cfg.inner_folds, mix_seed(seed, ki), cfg.jobs);
        }
        out.models.push_back(train(kind, train_final, hp, mix_seed(seed, 100 + ki)));
    }

    out.labels.reserve(test_n.size());
    for (const auto& s : test_n) out.labels.push_back(s.label);
    for (std::size_t ki = 0; ki < 4; ++ki) {
        out.probs[ki].reserve(test_n.size());
        for (const auto& s : test_n) out.probs[ki].push_back(predict_proba(out.models[ki], s.features));
    }
    out.probs[4].reserve(test_n.size());
    for (const auto& s : test_n) {
        out.probs[4].push_back(ensemble_predict(out.models, s.features, cfg.ensemble_mode));
    }
    return out;
}

/// Uniform Bernoulli(0.5) decisions and U(0,1) probabilities.
inline EvalRow random_baseline(std::span<const int> labels, std::uint64_t seed) {
    if (labels.empty()) throw Error(Errc::empty_input, "random baseline needs labels");
    Rng rng(seed);
    std::vector<int> decisions(labels.size());
    std::vector<double> probs(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        decisions[i] = rng.bernoulli(0.5) ? 1 : 0;
        probs[i] = rng.uniform();
    }
    EvalRow row;
    row.model = "Random";
    row.acc = accuracy(decisions, labels);
    bool pos = false, neg = false;
    for (int y : labels) (y == 1 ? pos : neg) = true;
    row.auc = (pos && neg) ? roc_auc(probs, labels) : std::nan("");
    return row;
}

namespace detail {

inline const std::array<const char*, 5> model_row_names = {"SVM", "LGBM", "RF", "XGB", "Ensemble"};

struct RowAccumulator {
    std::array<double, 6> acc_sum{};
    std::array<double, 6> auc_sum{};
    std::size_t acc_count = 0;
    std::size_t auc_count = 0;

    void add_fold(const EvalRow& random_row, const FoldOutcome& fold) {
        acc_sum[0] += random_row.acc;
        std::vector<int> decisions;
        for (std::size_t ri = 0; ri < 5; ++ri) {
            decisions.clear();
            for (double p : fold.probs[ri]) decisions.push_back(decide(p));
            acc_sum[ri + 1] += accuracy(decisions, fold.labels);
        }
        ++acc_count;
        if (!std::isnan(random_row.auc)) {
            auc_sum[0] += random_row.auc;
            for (std::size_t ri = 0; ri < 5; ++ri) {
                auc_sum[ri + 1] += roc_auc(fold.probs[ri], fold.labels);
            }
            ++auc_count;
        }
    }

    std::vector<EvalRow> finalize() const {
        if (acc_count == 0) throw Error(Errc::empty_input, "no folds evaluated");
        if (auc_count == 0) {
            throw Error(Errc::single_class_test, "every test partition was single-class; AUC undefined");
        }
        std::vector<EvalRow> rows;
        rows.push_back({"Random", acc_sum[0] / static_cast<double>(acc_count),
                        auc_sum[0] / static_cast<double>(auc_count)});
        for (std::size_t ri = 0; ri < 5; ++ri) {
            rows.push_back({model_row_names[ri], acc_sum[ri + 1] / static_cast<double>(acc_count),
                            auc_sum[ri + 1] / static_cast<double>(auc_count)});
        }
        return rows;
    }
};

inline std::set<std::string> corpus_names(std::span<const Sample> samples) {
    std::set<std::string> names;
    for (const auto& s : samples) names.insert(s.corpus_name);
    return names;
}

}  // namespace detail

/// 5-fold cross-validation with participants split into equally sized
/// groups; every sample of a group lands in that fold's test set. The
/// report averages fold metrics.
inline EvalReport within_corpus(std::span<const Sample> samples, const std::string& corpus_name,
                                std::uint64_t seed, const EvalConfig& cfg = {}) {
    if (samples.empty()) throw Error(Errc::empty_input, "within_corpus needs samples");
    const auto folds = participant_folds(participant_ids(samples),
                                         static_cast<std::size_t>(cfg.outer_folds),
                                         mix_seed(seed, 0xF01D5ULL));
    detail::RowAccumulator acc;
    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
        const auto [train_part, test_part] = split_by_group(samples, folds[fi]);
        const std::uint64_t fold_seed = mix_seed(seed, fi);
        const auto outcome = run_fold(train_part, test_part, cfg, fold_seed);
        const auto random_row = random_baseline(outcome.labels, mix_seed(fold_seed, 0xBADC0DEULL));
        acc.add_fold(random_row, outcome);
    }
    EvalReport report;
    report.protocol = "within corpus=" + corpus_name;
    report.seed = seed;
    report.rows = acc.finalize();
    return report;
}

/// Train on every sample of one corpus, evaluate on every sample of the
/// other.
inline EvalReport cross_corpus(std::span<const Sample> train_samples,
                               std::span<const Sample> test_samples, std::uint64_t seed,
                               const EvalConfig& cfg = {}) {
    if (train_samples.empty() || test_samples.empty()) {
        throw Error(Errc::empty_input, "cross_corpus needs samples on both sides");
    }
    const auto train_names = detail::corpus_names(train_samples);
    const auto test_names = detail::corpus_names(test_samples);
    for (const auto& n : train_names) {
        if (test_names.count(n)) {
            throw Error(Errc::same_corpus, "train and test share corpus '" + n + "'");
        }
    }
    const auto outcome = run_fold(train_samples, test_samples, cfg, mix_seed(seed, 0xC7055ULL));
    const auto random_row = random_baseline(outcome.labels, mix_seed(seed, 0xBADC0DEULL));
    detail::RowAccumulator acc;
    acc.add_fold(random_row, outcome);
    EvalReport report;
    report.protocol = "cross train=" + *train_names.begin() + " test=" + *test_names.begin();
    report.seed = seed;
    report.rows = acc.finalize();
    return report;
}

/// Pool two corpora, hold the third out as the test set.
inline EvalReport loco(std::span<const Sample> all_samples, const std::string& held_out,
                       std::uint64_t seed, const EvalConfig& cfg = {}) {
    const auto names = detail::corpus_names(all_samples);
    if (names.size() != 3) {
        throw Error(Errc::invalid_config, "LOCO expects samples from exactly 3 corpora, got " +
                                              std::to_string(names.size()));
    }
    if (!names.count(held_out)) {
        throw Error(Errc::held_out_not_found, "held-out corpus '" + held_out + "' not among inputs");
    }
    std::vector<Sample> pool, held;
    for (const auto& s : all_samples) {
        (s.corpus_name == held_out ? held : pool).push_back(s);
    }
    const auto outcome = run_fold(pool, held, cfg, mix_seed(seed, 0x10C0ULL));
    const auto random_row = random_baseline(outcome.labels, mix_seed(seed, 0xBADC0DEULL));
    detail::RowAccumulator acc;
    acc.add_fold(random_row, outcome);
    EvalReport report;
    std::string pool_names;
    for (const auto& n : names) {
        if (n == held_out) continue;
        if (!pool_names.empty()) pool_names += "+";
        pool_names += n;
    }
    report.protocol = "loco hold_out=" + held_out + " pool=" + pool_names;
    report.seed = seed;
    report.rows = acc.finalize();
    return report;
}

}  // namespace physioml
