#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/folds.hpp"
#include "physioml/metrics.hpp"
#include "physioml/ml/gbdt.hpp"
#include "physioml/ml/svm.hpp"
#include "physioml/ml/tree.hpp"
#include "physioml/parallel.hpp"
#include "physioml/signal.hpp"

namespace physioml {

/// The four base classifiers. The two boosted kinds are one engine with
/// different growth policies: leaf-wise (LGBM row in reports) and
/// depth-wise (XGB row).
enum class ClassifierKind { svm_rbf, gbdt_leafwise, random_forest, gbdt_depthwise };

inline constexpr ClassifierKind all_classifier_kinds[] = {
    ClassifierKind::svm_rbf, ClassifierKind::gbdt_leafwise, ClassifierKind::random_forest,
    ClassifierKind::gbdt_depthwise};

inline const char* display_name(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::svm_rbf: return "SVM";
        case ClassifierKind::gbdt_leafwise: return "LGBM";
        case ClassifierKind::random_forest: return "RF";
        default: return "XGB";
    }
}

inline const char* kind_token(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::svm_rbf: return "SVM_RBF";
        case ClassifierKind::gbdt_leafwise: return "GBDT_LEAFWISE";
        case ClassifierKind::random_forest: return "RANDOM_FOREST";
        default: return "GBDT_DEPTHWISE";
    }
}

/// One grid cell. Each kind reads the fields it understands.
struct Hyperparams {
    double c = 1.0;
    double gamma = 0.1;
    int n_estimators = 100;
    int max_depth = 6;
    int max_leaves = 31;
    double learning_rate = 0.1;
};

struct GridSpec {
    std::vector<Hyperparams> svm;
    std::vector<Hyperparams> lgbm;
    std::vector<Hyperparams> rf;
    std::vector<Hyperparams> xgb;

    const std::vector<Hyperparams>& for_kind(ClassifierKind k) const {
        switch (k) {
            case ClassifierKind::svm_rbf: return svm;
            case ClassifierKind::gbdt_leafwise: return lgbm;
            case ClassifierKind::random_forest: return rf;
            default: return xgb;
        }
    }

    static GridSpec defaults() {
        GridSpec g;
        for (double c : {0.1, 1.0, 10.0}) {
            for (double gamma : {0.01, 0.1, 1.0}) {
                Hyperparams h;
                h.c = c;
                h.gamma = gamma;
                g.svm.push_back(h);
            }
        }
        for (int n : {100, 300}) {
            for (int leaves : {6, 31}) {
                for (double lr : {0.05, 0.1}) {
                    Hyperparams h;
                    h.n_estimators = n;
                    h.max_leaves = leaves;
                    h.learning_rate = lr;
                    g.lgbm.push_back(h);
                }
            }
            for (int depth : {3, 6, 31}) {
                Hyperparams h;
                h.n_estimators = n;
                h.max_depth = depth;
                g.rf.push_back(h);
            }
            for (int depth : {3, 6}) {
                for (double lr : {0.05, 0.1}) {
                    Hyperparams h;
                    h.n_estimators = n;
                    h.max_depth = depth;
                    h.learning_rate = lr;
                    g.xgb.push_back(h);
                }
            }
        }
        return g;
    }
};

struct TrainedModel {
    ClassifierKind kind = ClassifierKind::svm_rbf;
    std::size_t feature_count = 0;
    std::uint64_t seed = 0;
    std::variant<SvmModel, ForestModel, GbdtModel> impl;
};

namespace detail {

inline std::vector<std::vector<double>> feature_matrix(std::span<const Sample> samples) {
    std::vector<std::vector<double>> x;
    x.reserve(samples.size());
    for (const auto& s : samples) {
        const auto a = s.features.to_array();
        x.emplace_back(a.begin(), a.end());
    }
    return x;
}

inline std::vector<int> label_vector(std::span<const Sample> samples) {
    std::vector<int> y;
    y.reserve(samples.size());
    for (const auto& s : samples) y.push_back(s.label);
    return y;
}

}  // namespace detail

/// Trains one classifier on (already normalized) samples. Deterministic for
/// a fixed seed.
inline TrainedModel train(ClassifierKind kind, std::span<const Sample> samples,
                          const Hyperparams& hp, std::uint64_t seed) {
    if (samples.empty()) throw Error(Errc::too_few_samples, "no training samples");
    std::size_t pos = 0;
    for (const auto& s : samples) pos += (s.label == 1);
    if (pos < 2 || samples.size() - pos < 2) {
        throw Error(Errc::single_class, "training needs at least 2 samples per class");
    }
    const auto x = detail::feature_matrix(samples);
    const auto y = detail::label_vector(samples);

    TrainedModel model;
    model.kind = kind;
    model.feature_count = x[0].size();
    model.seed = seed;
    switch (kind) {
        case ClassifierKind::svm_rbf: {
            SvmParams p;
            p.c = hp.c;
            p.gamma = hp.gamma;
            model.impl = train_svm(x, y, p);
            break;
        }
        case ClassifierKind::random_forest: {
            ForestParams p;
            p.n_estimators = hp.n_estimators;
            p.max_depth = hp.max_depth;
            model.impl = train_forest(x, y, p, seed);
            break;
        }
        case ClassifierKind::gbdt_leafwise: {
            GbdtParams p;
            p.n_estimators = hp.n_estimators;
            p.learning_rate = hp.learning_rate;
            p.max_leaves = hp.max_leaves;
            p.max_depth = 48;
            p.growth = GbdtGrowth::leafwise;
            p.min_child_hess = 1e-3;  // leaf-wise engines default much lower
            model.impl = train_gbdt(x, y, p);
            break;
        }
        case ClassifierKind::gbdt_depthwise: {
            GbdtParams p;
            p.n_estimators = hp.n_estimators;
            p.learning_rate = hp.learning_rate;
            p.max_depth = hp.max_depth;
            p.growth = GbdtGrowth::depthwise;
            model.impl = train_gbdt(x, y, p);
            break;
        }
    }
    return model;
}

inline double predict_proba(const TrainedModel& model, std::span<const double> x) {
    if (x.size() != model.feature_count) {
        throw Error(Errc::dimension_mismatch, "feature count does not match the trained model");
    }
    return std::visit([&](const auto& m) { return m.predict_proba(x); }, model.impl);
}

inline double predict_proba(const TrainedModel& model, const FeatureVector& f) {
    const auto a = f.to_array();
    return predict_proba(model, std::span<const double>(a.data(), a.size()));
}

inline int decide(double p) { return p >= 0.5 ? 1 : 0; }

enum class EnsembleMode { mean_probability, majority_vote };

/// Equally weighted ensemble over the four base models. Vote mode breaks
/// 2-2 ties toward the positive class.
inline double ensemble_predict(std::span<const TrainedModel> models, std::span<const double> x,
                               EnsembleMode mode = EnsembleMode::mean_probability) {
    if (models.empty()) throw Error(Errc::model_missing, "ensemble needs at least one model");
    if (mode == EnsembleMode::mean_probability) {
        double sum = 0.0;
        for (const auto& m : models) sum += predict_proba(m, x);
        return sum / static_cast<double>(models.size());
    }
    std::size_t votes = 0;
    for (const auto& m : models) votes += decide(predict_proba(m, x));
    return 2 * votes >= models.size() ? 1.0 : 0.0;
}

inline double ensemble_predict(std::span<const TrainedModel> models, const FeatureVector& f,
                               EnsembleMode mode = EnsembleMode::mean_probability) {
    const auto a = f.to_array();
    return ensemble_predict(models, std::span<const double>(a.data(), a.size()), mode);
}

/// Exhaustive grid search scored by mean AUC over an inner
/// participant-grouped cross-validation of the training set. Ties keep the
/// first grid entry. Accepts only the training partition by construction.
inline Hyperparams grid_search(ClassifierKind kind, std::span<const Sample> train_samples,
                               const GridSpec& grid, int inner_folds = 3, std::uint64_t seed = 0,
                               int jobs = 1) {
    const auto& cells = grid.for_kind(kind);
    if (cells.empty()) throw Error(Errc::empty_grid, "empty hyperparameter grid");
    if (cells.size() == 1) return cells[0];

    const auto ids = participant_ids(train_samples);
    std::set<std::string> distinct(ids.begin(), ids.end());
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(inner_folds), distinct.size());
    if (k < 2) throw Error(Errc::too_few_participants, "grid search needs at least 2 participants");
    const auto folds = participant_folds(ids, k, mix_seed(seed, 0x6f1d5u));

    std::vector<std::pair<std::vector<Sample>, std::vector<Sample>>> splits;
    for (const auto& group : folds) {
        auto split = split_by_group(train_samples, group);
        // Inner folds whose halves lack a class cannot be scored.
        auto has_both = [](std::span<const Sample> v) {
            bool p = false, q = false;
            for (const auto& s : v) (s.label == 1 ? p : q) = true;
            return p && q;
        };
        if (has_both(split.first) && has_both(split.second)) splits.push_back(std::move(split));
    }

    std::vector<double> scores(cells.size(), 0.5);
    parallel_for(cells.size(), jobs, [&](std::size_t ci) {
        double auc_sum = 0.0;
        std::size_t auc_count = 0;
        for (std::size_t fi = 0; fi < splits.size(); ++fi) {
            const auto& [inner_train, inner_test] = splits[fi];
            TrainedModel m;
            try {
                m = train(kind, inner_train, cells[ci], mix_seed(seed, 1000 + fi));
            } catch (const Error&) {
                continue;  // cell unusable on this fold
            }
            std::vector<double> probs;
            std::vector<int> labels;
            probs.reserve(inner_test.size());
            for (const auto& s : inner_test) {
                probs.push_back(predict_proba(m, s.features));
                labels.push_back(s.label);
            }
            auc_sum += roc_auc(probs, labels);
            ++auc_count;
        }
        if (auc_count > 0) scores[ci] = auc_sum / static_cast<double>(auc_count);
    });

    std::size_t best = 0;
    for (std::size_t ci = 1; ci < cells.size(); ++ci) {
        if (scores[ci] > scores[best]) best = ci;  // strict: ties keep first
    }
    return cells[best];
}

// ---------------------------------------------------------------------------
// Versioned text serialization; doubles as hexfloats for exact round-trips
// ---------------------------------------------------------------------------

namespace detail {

inline std::string hexd(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double parse_hexd(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

inline void save_tree(std::ostream& out, const Tree& tree) {
    out << "tree " << tree.nodes.size() << "\n";
    for (const auto& nd : tree.nodes) {
        out << nd.feature << ' ' << hexd(nd.threshold) << ' ' << nd.left << ' ' << nd.right << ' '
            << hexd(nd.value) << "\n";
    }
}

inline Tree load_tree(std::istream& in) {
    std::string tag;
    std::size_t count = 0;
    in >> tag >> count;
    if (tag != "tree") throw Error(Errc::parse_error, "expected tree record");
    Tree tree;
    tree.nodes.resize(count);
    for (auto& nd : tree.nodes) {
        std::string thr, val;
        in >> nd.feature >> thr >> nd.left >> nd.right >> val;
        nd.threshold = parse_hexd(thr);
        nd.value = parse_hexd(val);
    }
    if (!in) throw Error(Errc::parse_error, "truncated tree record");
    return tree;
}

}  // namespace detail

inline void save_model(const std::string& path, const TrainedModel& model) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io_error, "cannot write " + path);
    out << "physioml-model v1\n";
    out << "kind " << kind_token(model.kind) << "\n";
    out << "features " << model.feature_count << "\n";
    out << "seed " << model.seed << "\n";
    if (const auto* svm = std::get_if<SvmModel>(&model.impl)) {
        out << "svm gamma " << detail::hexd(svm->gamma) << " rho " << detail::hexd(svm->rho)
            << " platt_a " << detail::hexd(svm->platt_a) << " platt_b " << detail::hexd(svm->platt_b)
            << " nsv " << svm->support_vectors.size() << "\n";
        for (std::size_t s = 0; s < svm->support_vectors.size(); ++s) {
            out << detail::hexd(svm->coef[s]);
            for (double v : svm->support_vectors[s]) out << ' ' << detail::hexd(v);
            out << "\n";
        }
    } else if (const auto* forest = std::get_if<ForestModel>(&model.impl)) {
        out << "forest " << forest->trees.size() << "\n";
        for (const auto& t : forest->trees) detail::save_tree(out, t);
    } else {
        const auto& gbdt = std::get<GbdtModel>(model.impl);
        out << "gbdt base " << detail::hexd(gbdt.base_score) << " ntrees " << gbdt.trees.size() << "\n";
        for (const auto& t : gbdt.trees) detail::save_tree(out, t);
    }
    if (!out) throw Error(Errc::io_error, "failed writing " + path);
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::missing_file, "model file not found: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "physioml-model v1") throw Error(Errc::parse_error, "unknown model format");
    TrainedModel model;
    std::string tag, token;
    in >> tag >> token;
    if (tag != "kind") throw Error(Errc::parse_error, "missing kind");
    bool found = false;
    for (ClassifierKind k : all_classifier_kinds) {
        if (token == kind_token(k)) {
            model.kind = k;
            found = true;
        }
    }
    if (!found) throw Error(Errc::parse_error, "unknown classifier kind " + token);
    in >> tag >> model.feature_count;
    if (tag != "features") throw Error(Errc::parse_error, "missing features");
    in >> tag >> model.seed;
    if (tag != "seed") throw Error(Errc::parse_error, "missing seed");
    in >> tag;
    if (tag == "svm") {
        SvmModel svm;
        std::string g, r, pa, pb;
        std::size_t nsv = 0;
        std::string key;
        in >> key >> g >> key >> r >> key >> pa >> key >> pb >> key >> nsv;
        svm.gamma = detail::parse_hexd(g);
        svm.rho = detail::parse_hexd(r);
        svm.platt_a = detail::parse_hexd(pa);
        svm.platt_b = detail::parse_hexd(pb);
        svm.coef.resize(nsv);
        svm.support_vectors.assign(nsv, std::vector<double>(model.feature_count));
        for (std::size_t s = 0; s < nsv; ++s) {
            in >> token;
            svm.coef[s] = detail::parse_hexd(token);
            for (auto& v : svm.support_vectors[s]) {
                in >> token;
                v = detail::parse_hexd(token);
            }
        }
        if (!in) throw Error(Errc::parse_error, "truncated SVM record");
        model.impl = std::move(svm);
    } else if (tag == "forest") {
        std::size_t ntrees = 0;
        in >> ntrees;
        ForestModel forest;
        for (std::size_t t = 0; t < ntrees; ++t) forest.trees.push_back(detail::load_tree(in));
        model.impl = std::move(forest);
    } else if (tag == "gbdt") {
        std::string key, base;
        std::size_t ntrees = 0;
        in >> key >> base;   // base <hex>
        in >> key >> ntrees; // ntrees <n>
        GbdtModel gbdt;
        gbdt.base_score = detail::parse_hexd(base);
        for (std::size_t t = 0; t < ntrees; ++t) gbdt.trees.push_back(detail::load_tree(in));
        model.impl = std::move(gbdt);
    } else {
        throw Error(Errc::parse_error, "unknown model section " + tag);
    }
    return model;
}

}  // namespace physioml
