#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/rng.hpp"

namespace physioml {

/// Shared binary-tree layout for the forest and the boosted ensembles.
/// Leaves carry `value`; interior nodes route on feature < threshold.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const {
        int idx = 0;
        while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(idx)];
            idx = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(idx)].value;
    }
};

struct ForestParams {
    int n_estimators = 100;
    int max_depth = 6;
    int min_samples_leaf = 1;
};

/// Bagged CART trees with Gini splits and sqrt(d) feature subsampling per
/// node. Leaves vote a class; the forest probability is the positive vote
/// fraction.
struct ForestModel {
    std::vector<Tree> trees;

    double predict_proba(std::span<const double> x) const {
        double votes = 0.0;
        for (const auto& t : trees) votes += t.predict(x);
        return votes / static_cast<double>(trees.size());
    }
};

namespace detail {

struct GiniSplit {
    int feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

/// Exact greedy Gini split over the given candidate features.
inline GiniSplit best_gini_split(const std::vector<std::vector<double>>& x, std::span<const int> y,
                                 std::span<const std::size_t> idx, std::span<const int> features,
                                 int min_samples_leaf) {
    const double n = static_cast<double>(idx.size());
    std::size_t total_pos = 0;
    for (std::size_t i : idx) total_pos += (y[i] == 1);
    const double p = static_cast<double>(total_pos) / n;
    const double parent_gini = 2.0 * p * (1.0 - p);

    GiniSplit best;
    std::vector<std::size_t> order(idx.begin(), idx.end());
    for (int f : features) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return x[a][static_cast<std::size_t>(f)] < x[b][static_cast<std::size_t>(f)];
        });
        std::size_t left_pos = 0;
        for (std::size_t split = 1; split < order.size(); ++split) {
            left_pos += (y[order[split - 1]] == 1);
            const double lo = x[order[split - 1]][static_cast<std::size_t>(f)];
            const double hi = x[order[split]][static_cast<std::size_t>(f)];
            if (lo == hi) continue;
            const double n_left = static_cast<double>(split);
            const double n_right = n - n_left;
            if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
            const double pl = static_cast<double>(left_pos) / n_left;
            const double pr = static_cast<double>(total_pos - left_pos) / n_right;
            const double child =
                (n_left * 2.0 * pl * (1.0 - pl) + n_right * 2.0 * pr * (1.0 - pr)) / n;
            const double gain = parent_gini - child;
            if (gain > best.impurity_decrease + 1e-15) {
                best.impurity_decrease = gain;
                best.feature = f;
                best.threshold = 0.5 * (lo + hi);
            }
        }
    }
    return best;
}

inline void grow_cart(Tree& tree, int node_idx, const std::vector<std::vector<double>>& x,
                      std::span<const int> y, std::vector<std::size_t>& idx, int depth,
                      const ForestParams& params, std::size_t mtry, Rng& rng) {
    std::size_t pos = 0;
    for (std::size_t i : idx) pos += (y[i] == 1);
    auto make_leaf = [&] {
        tree.nodes[static_cast<std::size_t>(node_idx)].feature = -1;
        tree.nodes[static_cast<std::size_t>(node_idx)].value =
            2 * pos >= idx.size() ? 1.0 : 0.0;  // majority vote, ties positive
    };
    if (depth >= params.max_depth || pos == 0 || pos == idx.size() || idx.size() < 2) {
        make_leaf();
        return;
    }

    // Feature subsample without replacement. The search keeps going past
    // mtry candidates until some feature yields a valid split, so nodes
    // with degenerate sampled features still split when any feature can.
    const std::size_t d = x[0].size();
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t j = 0; j + 1 < d; ++j) {
        std::swap(order[j], order[j + rng.index(d - j)]);
    }
    detail::GiniSplit split;
    std::size_t tried = 0;
    for (int f : order) {
        const int fs[1] = {f};
        const auto cand = best_gini_split(x, y, idx, fs, params.min_samples_leaf);
        if (cand.impurity_decrease > split.impurity_decrease) split = cand;
        ++tried;
        if (tried >= mtry && split.feature >= 0) break;
    }
    if (split.feature < 0) {
        make_leaf();
        return;
    }
    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        (x[i][static_cast<std::size_t>(split.feature)] < split.threshold ? left_idx : right_idx)
            .push_back(i);
    }
    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& nd = tree.nodes[static_cast<std::size_t>(node_idx)];
    nd.feature = split.feature;
    nd.threshold = split.threshold;
    nd.left = left;
    nd.right = right;
    grow_cart(tree, left, x, y, left_idx, depth + 1, params, mtry, rng);
    grow_cart(tree, right, x, y, right_idx, depth + 1, params, mtry, rng);
}

}  // namespace detail

inline ForestModel train_forest(const std::vector<std::vector<double>>& x, std::span<const int> y,
                                const ForestParams& params, std::uint64_t seed) {
    const std::size_t n = x.size();
    if (n < 2) throw Error(Errc::too_few_samples, "forest needs at least 2 samples");
    const std::size_t d = x[0].size();
    const std::size_t mtry =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d)))));
    ForestModel model;
    model.trees.resize(static_cast<std::size_t>(params.n_estimators));
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        Rng rng(mix_seed(seed, t));
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = rng.index(n);  // bootstrap
        Tree& tree = model.trees[t];
        tree.nodes.emplace_back();
        detail::grow_cart(tree, 0, x, y, idx, 0, params, mtry, rng);
    }
    return model;
}

}  // namespace physioml
