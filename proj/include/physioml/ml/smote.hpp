#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "physioml/error.hpp"
#include "physioml/rng.hpp"
#include "physioml/signal.hpp"

namespace physioml {

/// Synthetic minority oversampling: each synthetic point is
/// x_i + u * (x_nn - x_i) with u ~ U(0,1) and x_nn one of the k nearest
/// minority neighbors of x_i. Originals are preserved and the output has
/// equal class counts. Balanced input comes back unchanged.
inline std::vector<Sample> smote(std::span<const Sample> samples, int k, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (samples[i].label == 1 ? pos : neg).push_back(i);
    }
    std::vector<Sample> out(samples.begin(), samples.end());
    if (pos.size() == neg.size()) return out;
    const auto& minority = pos.size() < neg.size() ? pos : neg;
    const auto& majority = pos.size() < neg.size() ? neg : pos;
    if (minority.size() < 2) {
        throw Error(Errc::minority_too_small, "SMOTE needs at least 2 minority samples");
    }

    // k nearest minority neighbors per minority point (Euclidean).
    const std::size_t k_eff = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, k)),
                                                    minority.size() - 1);
    std::vector<std::vector<std::size_t>> neighbors(minority.size());
    for (std::size_t a = 0; a < minority.size(); ++a) {
        const auto xa = samples[minority[a]].features.to_array();
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(minority.size() - 1);
        for (std::size_t b = 0; b < minority.size(); ++b) {
            if (a == b) continue;
            const auto xb = samples[minority[b]].features.to_array();
            double d2 = 0.0;
            for (std::size_t j = 0; j < xa.size(); ++j) {
                const double d = xa[j] - xb[j];
                d2 += d * d;
            }
            dist.emplace_back(d2, b);
        }
        std::sort(dist.begin(), dist.end());
        for (std::size_t j = 0; j < k_eff; ++j) neighbors[a].push_back(dist[j].second);
    }

    Rng rng(seed);
    const std::size_t needed = majority.size() - minority.size();
    for (std::size_t s = 0; s < needed; ++s) {
        const std::size_t a = s % minority.size();
        const std::size_t nn = neighbors[a][rng.index(neighbors[a].size())];
        const double u = rng.uniform();
        const auto xa = samples[minority[a]].features.to_array();
        const auto xb = samples[minority[nn]].features.to_array();
        std::array<double, 16> xs{};
        for (std::size_t j = 0; j < xs.size(); ++j) xs[j] = xa[j] + u * (xb[j] - xa[j]);
        Sample synth = samples[minority[a]];
        synth.features = FeatureVector::from_array(xs);
        out.push_back(std::move(synth));
    }
    return out;
}

}  // namespace physioml
