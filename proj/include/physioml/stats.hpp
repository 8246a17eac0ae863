#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "physioml/error.hpp"

namespace physioml {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw Error(Errc::empty_input, "mean of empty sequence");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Sample variance with the N-1 divisor; defined as 0 for a single value.
inline double sample_variance(std::span<const double> x) {
    if (x.empty()) throw Error(Errc::empty_input, "variance of empty sequence");
    if (x.size() == 1) return 0.0;
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) {
        const double d = v - m;
        acc += d * d;
    }
    return acc / static_cast<double>(x.size() - 1);
}

inline double sample_stddev(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

/// Midpoint of the two central order statistics for even N.
inline double median(std::span<const double> x) {
    if (x.empty()) throw Error(Errc::empty_input, "median of empty sequence");
    std::vector<double> v(x.begin(), x.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline bool all_finite(std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

/// Two-tailed standard normal tail probability: P(|Z| >= |z|).
inline double normal_two_tailed_p(double z) {
    return std::erfc(std::fabs(z) / 1.4142135623730950488);
}

}  // namespace physioml
