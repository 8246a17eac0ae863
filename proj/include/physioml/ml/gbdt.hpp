#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/ml/tree.hpp"

namespace physioml {

enum class GbdtGrowth { depthwise, leafwise };

struct GbdtParams {
    int n_estimators = 100;
    double learning_rate = 0.1;
    int max_depth = 6;    // depth-wise limit
    int max_leaves = 31;  // leaf-wise limit
    GbdtGrowth growth = GbdtGrowth::depthwise;
    double reg_lambda = 1.0;
    double min_child_hess = 1.0;
};

/// Gradient-boosted trees on logistic loss with second-order (Newton)
/// splits. The two growth policies bound the tree shape differently:
/// depth-wise expands whole levels, leaf-wise always expands the leaf with
/// the largest gain.
struct GbdtModel {
    double base_score = 0.0;  // log-odds prior
    std::vector<Tree> trees;

    double raw_score(std::span<const double> x) const {
        double f = base_score;
        for (const auto& t : trees) f += t.predict(x);
        return f;
    }

    double predict_proba(std::span<const double> x) const {
        const double f = raw_score(x);
        if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
        return std::exp(f) / (1.0 + std::exp(f));
    }
};

namespace detail {

struct NewtonSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

inline double leaf_weight(double g, double h, double lambda) { return -g / (h + lambda); }

inline double score_term(double g, double h, double lambda) { return g * g / (h + lambda); }

inline NewtonSplit best_newton_split(const std::vector<std::vector<double>>& x,
                                     std::span<const double> grad, std::span<const double> hess,
                                     std::span<const std::size_t> idx, const GbdtParams& params) {
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t i : idx) {
        g_total += grad[i];
        h_total += hess[i];
    }
    NewtonSplit best;
    if (idx.size() < 2) return best;
    const std::size_t d = x[0].size();
    std::vector<std::size_t> order(idx.begin(), idx.end());
    for (std::size_t f = 0; f < d; ++f) {
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
        double gl = 0.0, hl = 0.0;
        for (std::size_t split = 1; split < order.size(); ++split) {
            gl += grad[order[split - 1]];
            hl += hess[order[split - 1]];
            const double lo = x[order[split - 1]][f];
            const double hi = x[order[split]][f];
            if (lo == hi) continue;
            const double gr = g_total - gl, hr = h_total - hl;
            if (hl < params.min_child_hess || hr < params.min_child_hess) continue;
            const double gain = 0.5 * (score_term(gl, hl, params.reg_lambda) +
                                       score_term(gr, hr, params.reg_lambda) -
                                       score_term(g_total, h_total, params.reg_lambda));
            if (gain > best.gain + 1e-15) {
                best.gain = gain;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (lo + hi);
            }
        }
    }
    return best;
}

struct LeafCandidate {
    double gain;
    int node;
    int depth;
    std::vector<std::size_t> idx;
    NewtonSplit split;

    bool operator<(const LeafCandidate& other) const { return gain < other.gain; }
};

inline Tree build_newton_tree(const std::vector<std::vector<double>>& x, std::span<const double> grad,
                              std::span<const double> hess, const GbdtParams& params) {
    Tree tree;
    tree.nodes.emplace_back();

    auto finalize_leaf = [&](int node, std::span<const std::size_t> idx) {
        double g = 0.0, h = 0.0;
        for (std::size_t i : idx) {
            g += grad[i];
            h += hess[i];
        }
        tree.nodes[static_cast<std::size_t>(node)].feature = -1;
        tree.nodes[static_cast<std::size_t>(node)].value =
            params.learning_rate * leaf_weight(g, h, params.reg_lambda);
    };

    std::vector<std::size_t> root_idx(x.size());
    std::iota(root_idx.begin(), root_idx.end(), std::size_t{0});

    if (params.growth == GbdtGrowth::depthwise) {
        struct Item {
            int node;
            int depth;
            std::vector<std::size_t> idx;
        };
        std::vector<Item> frontier;
        frontier.push_back({0, 0, std::move(root_idx)});
        while (!frontier.empty()) {
            std::vector<Item> next;
            for (auto& item : frontier) {
                const auto split = item.depth < params.max_depth
                                       ? best_newton_split(x, grad, hess, item.idx, params)
                                       : NewtonSplit{};
                if (split.feature < 0 || split.gain <= 0.0) {
                    finalize_leaf(item.node, item.idx);
                    continue;
                }
                std::vector<std::size_t> li, ri;
                for (std::size_t i : item.idx) {
                    (x[i][static_cast<std::size_t>(split.feature)] < split.threshold ? li : ri).push_back(i);
                }
                const int left = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                const int right = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                auto& nd = tree.nodes[static_cast<std::size_t>(item.node)];
                nd.feature = split.feature;
                nd.threshold = split.threshold;
                nd.left = left;
                nd.right = right;
                next.push_back({left, item.depth + 1, std::move(li)});
                next.push_back({right, item.depth + 1, std::move(ri)});
            }
            frontier = std::move(next);
        }
        return tree;
    }

    // Leaf-wise: repeatedly expand the highest-gain leaf until the leaf
    // budget is spent.
    std::priority_queue<LeafCandidate> heap;
    auto push_candidate = [&](int node, int depth, std::vector<std::size_t> idx) {
        LeafCandidate cand;
        cand.node = node;
        cand.depth = depth;
        cand.split = best_newton_split(x, grad, hess, idx, params);
        cand.gain = cand.split.gain;
        cand.idx = std::move(idx);
        if (cand.split.feature < 0 || cand.gain <= 0.0 || depth >= 48) {
            finalize_leaf(node, cand.idx);
        } else {
            heap.push(std::move(cand));
        }
    };
    push_candidate(0, 0, std::move(root_idx));
    int leaves = 1;
    while (!heap.empty() && leaves < params.max_leaves) {
        LeafCandidate cand = heap.top();
        heap.pop();
        std::vector<std::size_t> li, ri;
        for (std::size_t i : cand.idx) {
            (x[i][static_cast<std::size_t>(cand.split.feature)] < cand.split.threshold ? li : ri)
                .push_back(i);
        }
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        const int right = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        auto& nd = tree.nodes[static_cast<std::size_t>(cand.node)];
        nd.feature = cand.split.feature;
        nd.threshold = cand.split.threshold;
        nd.left = left;
        nd.right = right;
        ++leaves;  // one leaf became two
        push_candidate(left, cand.depth + 1, std::move(li));
        push_candidate(right, cand.depth + 1, std::move(ri));
    }
    while (!heap.empty()) {
        const LeafCandidate& cand = heap.top();
        finalize_leaf(cand.node, cand.idx);
        heap.pop();
    }
    return tree;
}

}  // namespace detail

inline GbdtModel train_gbdt(const std::vector<std::vector<double>>& x, std::span<const int> y,
                            const GbdtParams& params) {
    const std::size_t n = x.size();
    if (n < 2) throw Error(Errc::too_few_samples, "GBDT needs at least 2 samples");
    double pos = 0.0;
    for (int v : y) pos += (v == 1);
    const double prior = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);

    GbdtModel model;
    model.base_score = std::log(prior / (1.0 - prior));
    std::vector<double> raw(n, model.base_score);
    std::vector<double> grad(n), hess(n);
    for (int round = 0; round < params.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-raw[i]));
            grad[i] = p - static_cast<double>(y[i]);
            hess[i] = std::max(p * (1.0 - p), 1e-12);
        }
        Tree tree = detail::build_newton_tree(x, grad, hess, params);
        for (std::size_t i = 0; i < n; ++i) raw[i] += tree.predict(x[i]);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace physioml
