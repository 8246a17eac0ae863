#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "physioml/metrics.hpp"
#include "physioml/ml/model.hpp"
#include "physioml/ml/smote.hpp"
#include "physioml/rng.hpp"

using namespace physioml;

namespace {

Sample make_sample(double f0, double f1, int label, const std::string& pid) {
    Sample s;
    auto a = s.features.to_array();
    a[0] = f0;
    a[1] = f1;
    s.features = FeatureVector::from_array(a);
    s.label = label;
    s.participant_id = pid;
    s.corpus_name = "test";
    return s;
}

/// Two linearly separable clusters spread over several participants.
std::vector<Sample> separable_clusters(std::size_t per_class, std::uint64_t seed,
                                       double gap = 4.0) {
    Rng rng(seed);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < per_class; ++i) {
        const std::string pid = "p" + std::to_string(i % 5);
        out.push_back(make_sample(-gap / 2 + 0.3 * rng.normal(), -1.0 + 0.3 * rng.normal(), 0, pid));
        out.push_back(make_sample(gap / 2 + 0.3 * rng.normal(), 1.0 + 0.3 * rng.normal(), 1, pid));
    }
    return out;
}

std::vector<Sample> random_labels(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        auto a = s.features.to_array();
        for (auto& v : a) v = rng.normal();
        s.features = FeatureVector::from_array(a);
        s.label = rng.bernoulli(0.5) ? 1 : 0;
        s.participant_id = "p" + std::to_string(i % 10);
        out.push_back(std::move(s));
    }
    return out;
}

Hyperparams fast_params() {
    Hyperparams hp;
    hp.n_estimators = 40;
    hp.max_depth = 4;
    hp.max_leaves = 15;
    hp.c = 1.0;
    hp.gamma = 0.5;
    return hp;
}

}  // namespace

TEST_CASE("SMOTE returns balanced input unchanged", "[ml]") {
    std::vector<Sample> balanced = {make_sample(0, 0, 0, "a"), make_sample(1, 1, 1, "a"),
                                    make_sample(2, 0, 0, "a"), make_sample(3, 1, 1, "a")};
    const auto out = smote(balanced, 5, 42);
    REQUIRE(out.size() == balanced.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        REQUIRE(out[i].features.to_array() == balanced[i].features.to_array());
    }
}

TEST_CASE("SMOTE synthesizes on the segment between minority points", "[ml]") {
    std::vector<Sample> data = {make_sample(0, 0, 1, "a"), make_sample(1, 1, 1, "a"),
                                make_sample(5, 5, 0, "a"), make_sample(6, 5, 0, "a"),
                                make_sample(7, 5, 0, "a")};
    const auto out = smote(data, 5, 7);
    REQUIRE(out.size() == 6);  // 3 vs 3
    const auto a = out.back().features.to_array();
    REQUIRE(out.back().label == 1);
    REQUIRE(a[0] >= 0.0);
    REQUIRE(a[0] <= 1.0);
    REQUIRE(a[1] == Catch::Approx(a[0]));  // on the segment (0,0)-(1,1)
}

TEST_CASE("SMOTE balances 10 vs 30 to 30 vs 30", "[ml]") {
    Rng rng(3);
    std::vector<Sample> data;
    for (int i = 0; i < 10; ++i) data.push_back(make_sample(rng.normal(), rng.normal(), 1, "a"));
    for (int i = 0; i < 30; ++i)
        data.push_back(make_sample(5.0 + rng.normal(), rng.normal(), 0, "a"));
    const auto out = smote(data, 5, 11);
    std::size_t pos = 0;
    for (const auto& s : out) pos += (s.label == 1);
    REQUIRE(out.size() == 60);
    REQUIRE(pos == 30);
    // Originals preserved as a prefix.
    for (std::size_t i = 0; i < data.size(); ++i) {
        REQUIRE(out[i].features.to_array() == data[i].features.to_array());
    }
}

TEST_CASE("SMOTE synthetics are convex combinations of same-class points", "[ml]") {
    Rng rng(19);
    std::vector<Sample> data;
    for (int i = 0; i < 8; ++i) data.push_back(make_sample(rng.uniform(), rng.uniform(), 1, "a"));
    for (int i = 0; i < 20; ++i)
        data.push_back(make_sample(rng.uniform(3.0, 4.0), rng.uniform(), 0, "a"));
    const auto out = smote(data, 3, 23);
    for (std::size_t i = data.size(); i < out.size(); ++i) {
        REQUIRE(out[i].label == 1);
        const auto a = out[i].features.to_array();
        // Inside the minority bounding box (convexity consequence).
        REQUIRE(a[0] >= 0.0);
        REQUIRE(a[0] <= 1.0);
        REQUIRE(a[1] >= 0.0);
        REQUIRE(a[1] <= 1.0);
    }
}

TEST_CASE("SMOTE rejects a one-point minority", "[ml]") {
    std::vector<Sample> data = {make_sample(0, 0, 1, "a"), make_sample(5, 5, 0, "a"),
                                make_sample(6, 5, 0, "a")};
    try {
        smote(data, 5, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::minority_too_small);
    }
}

TEST_CASE("every classifier separates clean clusters at training time", "[ml]") {
    const auto data = separable_clusters(10, 1);
    for (ClassifierKind kind : all_classifier_kinds) {
        const auto model = train(kind, data, fast_params(), 5);
        std::vector<int> decisions, labels;
        for (const auto& s : data) {
            decisions.push_back(decide(predict_proba(model, s.features)));
            labels.push_back(s.label);
        }
        INFO(display_name(kind));
        REQUIRE(accuracy(decisions, labels) == 1.0);
    }
}

TEST_CASE("random labels give near-chance cross-validated accuracy", "[ml]") {
    const auto data = random_labels(200, 33);
    const auto folds = participant_folds(participant_ids(data), 5, 77);
    for (ClassifierKind kind : all_classifier_kinds) {
        double acc_sum = 0.0;
        std::size_t count = 0;
        for (const auto& group : folds) {
            const auto [train_set, test_set] = split_by_group(data, group);
            const auto model = train(kind, train_set, fast_params(), 9);
            std::vector<int> decisions, labels;
            for (const auto& s : test_set) {
                decisions.push_back(decide(predict_proba(model, s.features)));
                labels.push_back(s.label);
            }
            acc_sum += accuracy(decisions, labels);
            ++count;
        }
        const double cv_acc = acc_sum / static_cast<double>(count);
        INFO(display_name(kind));
        REQUIRE(cv_acc >= 0.35);
        REQUIRE(cv_acc <= 0.65);
    }
}

TEST_CASE("training is deterministic given the seed", "[ml]") {
    const auto data = separable_clusters(12, 4);
    const auto probe = random_labels(20, 5);
    for (ClassifierKind kind : all_classifier_kinds) {
        const auto m1 = train(kind, data, fast_params(), 1234);
        const auto m2 = train(kind, data, fast_params(), 1234);
        for (const auto& s : probe) {
            REQUIRE(predict_proba(m1, s.features) == predict_proba(m2, s.features));
        }
    }
}

TEST_CASE("probabilities stay in range and confident points score high", "[ml]") {
    // Enough points per class that the min-child-weight floor does not cap
    // the boosted probabilities below the 0.9 mark.
    const auto data = separable_clusters(30, 6);
    const auto probe = random_labels(50, 8);
    for (ClassifierKind kind : all_classifier_kinds) {
        Hyperparams hp = fast_params();
        hp.n_estimators = 100;  // enough boosting rounds to saturate the margin
        const auto model = train(kind, data, hp, 3);
        for (const auto& s : probe) {
            const double p = predict_proba(model, s.features);
            REQUIRE(p >= 0.0);
            REQUIRE(p <= 1.0);
        }
        // A training point deep inside the positive cluster.
        const double p = predict_proba(model, make_sample(2.0, 1.0, 1, "z").features);
        INFO(display_name(kind));
        REQUIRE(p > 0.9);
    }
}

TEST_CASE("forest probability is the positive vote fraction", "[ml]") {
    ForestModel forest;
    for (int t = 0; t < 10; ++t) {
        Tree stump;
        TreeNode leaf;
        leaf.feature = -1;
        leaf.value = t < 3 ? 1.0 : 0.0;  // 3 of 10 vote positive
        stump.nodes.push_back(leaf);
        forest.trees.push_back(stump);
    }
    const std::vector<double> x(16, 0.0);
    REQUIRE(forest.predict_proba(x) == Catch::Approx(0.3));
}

TEST_CASE("dimension mismatches are rejected", "[ml]") {
    const auto data = separable_clusters(10, 2);
    const auto model = train(ClassifierKind::svm_rbf, data, fast_params(), 1);
    const std::vector<double> short_x(7, 0.0);
    REQUIRE_THROWS_AS(predict_proba(model, short_x), Error);
}

TEST_CASE("single-class training data is rejected", "[ml]") {
    std::vector<Sample> data = {make_sample(0, 0, 1, "a"), make_sample(1, 1, 1, "a"),
                                make_sample(2, 2, 1, "a")};
    try {
        train(ClassifierKind::random_forest, data, fast_params(), 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::single_class);
    }
}

TEST_CASE("ensemble mean sits between member probabilities", "[ml]") {
    const auto data = separable_clusters(10, 14);
    std::vector<TrainedModel> models;
    for (ClassifierKind kind : all_classifier_kinds) {
        models.push_back(train(kind, data, fast_params(), 21));
    }
    const auto probe = random_labels(30, 15);
    for (const auto& s : probe) {
        double lo = 1.0, hi = 0.0, sum = 0.0;
        for (const auto& m : models) {
            const double p = predict_proba(m, s.features);
            lo = std::min(lo, p);
            hi = std::max(hi, p);
            sum += p;
        }
        const double e = ensemble_predict(models, s.features);
        REQUIRE(e == Catch::Approx(sum / 4.0));
        REQUIRE(e >= lo - 1e-12);
        REQUIRE(e <= hi + 1e-12);
    }
}

TEST_CASE("an ensemble of identical models equals the single model", "[ml]") {
    const auto data = separable_clusters(10, 16);
    const auto m = train(ClassifierKind::gbdt_depthwise, data, fast_params(), 2);
    const std::vector<TrainedModel> models = {m, m, m, m};
    const auto probe = random_labels(20, 17);
    for (const auto& s : probe) {
        REQUIRE(ensemble_predict(models, s.features) ==
                Catch::Approx(predict_proba(m, s.features)));
    }
}

TEST_CASE("majority vote breaks 2-2 ties toward the positive class", "[ml]") {
    // Two stump forests voting 1, two voting 0.
    auto vote_forest = [](double v) {
        TrainedModel m;
        m.kind = ClassifierKind::random_forest;
        m.feature_count = 16;
        ForestModel f;
        Tree stump;
        TreeNode leaf;
        leaf.feature = -1;
        leaf.value = v;
        stump.nodes.push_back(leaf);
        f.trees.push_back(stump);
        m.impl = std::move(f);
        return m;
    };
    const std::vector<TrainedModel> models = {vote_forest(1.0), vote_forest(1.0), vote_forest(0.0),
                                              vote_forest(0.0)};
    const std::vector<double> x(16, 0.0);
    REQUIRE(ensemble_predict(models, x, EnsembleMode::majority_vote) == 1.0);
}

TEST_CASE("size-one grids are returned as-is", "[ml]") {
    GridSpec grid;
    Hyperparams only;
    only.c = 3.25;
    grid.svm = {only};
    const auto data = separable_clusters(10, 18);
    const auto best = grid_search(ClassifierKind::svm_rbf, data, grid, 3, 1);
    REQUIRE(best.c == 3.25);
}

TEST_CASE("grid search prefers the setting that separates the oracle", "[ml]") {
    // gamma far too large memorizes training points and transfers poorly
    // across participants; a moderate gamma generalizes.
    const auto data = separable_clusters(30, 19, 2.0);
    GridSpec grid;
    Hyperparams bad;
    bad.c = 0.01;
    bad.gamma = 500.0;
    Hyperparams good;
    good.c = 1.0;
    good.gamma = 0.5;
    grid.svm = {bad, good};
    const auto best = grid_search(ClassifierKind::svm_rbf, data, grid, 3, 5);
    REQUIRE(best.gamma == Catch::Approx(0.5));
}

TEST_CASE("models round-trip through the text format with exact predictions", "[ml]") {
    const auto data = separable_clusters(10, 20);
    const auto probe = random_labels(25, 21);
    const auto dir = std::filesystem::temp_directory_path() / "physioml_model_test";
    std::filesystem::create_directories(dir);
    for (ClassifierKind kind : all_classifier_kinds) {
        const auto m = train(kind, data, fast_params(), 31);
        const std::string path = (dir / (std::string(kind_token(kind)) + ".model")).string();
        save_model(path, m);
        const auto back = load_model(path);
        REQUIRE(back.kind == m.kind);
        REQUIRE(back.feature_count == m.feature_count);
        for (const auto& s : probe) {
            REQUIRE(predict_proba(back, s.features) == predict_proba(m, s.features));
        }
    }
    std::filesystem::remove_all(dir);
}
