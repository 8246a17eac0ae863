#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "physioml/error.hpp"

namespace physioml {

inline double accuracy(std::span<const int> decisions, std::span<const int> labels) {
    if (decisions.size() != labels.size()) {
        throw Error(Errc::length_mismatch, "decisions and labels differ in length");
    }
    if (decisions.empty()) throw Error(Errc::empty_input, "accuracy of empty vectors");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (decisions[i] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(decisions.size());
}

/// Area under the ROC curve via the Mann-Whitney rank statistic. Tied
/// probabilities receive their average rank, so ties contribute 1/2.
inline double roc_auc(std::span<const double> probs, std::span<const int> labels) {
    if (probs.size() != labels.size()) {
        throw Error(Errc::length_mismatch, "probabilities and labels differ in length");
    }
    if (probs.empty()) throw Error(Errc::empty_input, "AUC of empty vectors");
    const std::size_t n = probs.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += (y == 1);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(Errc::single_class, "AUC needs both classes present");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && probs[order[j + 1]] == probs[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);  // 1-based
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        }
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace physioml
