#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/rng.hpp"
#include "physioml/signal.hpp"

namespace physioml {

/// Participants split into k groups: seeded shuffle of the sorted distinct
/// ids, then round-robin assignment, so group sizes differ by at most one.
inline std::vector<std::vector<std::string>> participant_folds(std::span<const std::string> ids,
                                                               std::size_t k, std::uint64_t seed) {
    std::set<std::string> distinct(ids.begin(), ids.end());
    std::vector<std::string> order(distinct.begin(), distinct.end());
    if (order.size() < k) throw Error(Errc::too_few_participants, "fewer participants than folds");
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<std::string>> folds(k);
    for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(std::move(order[i]));
    return folds;
}

/// Splits samples into (train, test) where test holds every sample of the
/// given participant group.
inline std::pair<std::vector<Sample>, std::vector<Sample>> split_by_group(
    std::span<const Sample> samples, std::span<const std::string> test_group) {
    const std::set<std::string> test_ids(test_group.begin(), test_group.end());
    std::pair<std::vector<Sample>, std::vector<Sample>> out;
    for (const auto& s : samples) {
        (test_ids.count(s.participant_id) ? out.second : out.first).push_back(s);
    }
    return out;
}

inline std::vector<std::string> participant_ids(std::span<const Sample> samples) {
    std::vector<std::string> ids;
    ids.reserve(samples.size());
    for (const auto& s : samples) ids.push_back(s.participant_id);
    return ids;
}

}  // namespace physioml
