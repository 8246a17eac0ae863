#pragma once

#include <cstddef>
#include <span>

#include "physioml/error.hpp"
#include "physioml/signal.hpp"
#include "physioml/stats.hpp"

namespace physioml {

/// Fixed-threshold binarization rule for one self-report scheme. Thresholds
/// are the scale medians: SUDS 50, STAI6 15, joystick arousal 5. A boundary
/// score maps high by default; the paper pins that choice only for SUDS.
struct LabelRule {
    LabelScheme scheme = LabelScheme::suds;
    double threshold = 50.0;
    bool boundary_high = true;

    static LabelRule for_scheme(LabelScheme s, bool boundary_high = true) {
        switch (s) {
            case LabelScheme::suds: return {s, 50.0, boundary_high};
            case LabelScheme::stai6: return {s, 15.0, boundary_high};
            default: return {s, 5.0, boundary_high};
        }
    }
};

/// Binary label for one raw report: scalar schemes compare the score, the
/// continuous arousal scheme compares the series mean.
inline int label(const RawReport& report, const LabelRule& rule) {
    if (report.scheme != rule.scheme) {
        throw Error(Errc::scheme_mismatch, "report scheme does not match the label rule");
    }
    validate_report(report);
    const double score = report.scheme == LabelScheme::arousal_continuous
                             ? mean(*report.series)
                             : *report.scalar_score;
    if (rule.boundary_high) return score >= rule.threshold ? 1 : 0;
    return score > rule.threshold ? 1 : 0;
}

inline int label(const RawReport& report) { return label(report, LabelRule::for_scheme(report.scheme)); }

struct ClassBalance {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    double minority_ratio = 0.0;
};

inline ClassBalance class_balance(std::span<const Sample> samples) {
    if (samples.empty()) throw Error(Errc::empty_input, "class_balance of empty sample set");
    ClassBalance b;
    for (const auto& s : samples) {
        if (s.label == 1) {
            ++b.n_pos;
        } else {
            ++b.n_neg;
        }
    }
    const double lo = static_cast<double>(std::min(b.n_pos, b.n_neg));
    const double hi = static_cast<double>(std::max(b.n_pos, b.n_neg));
    b.minority_ratio = hi > 0.0 ? lo / hi : 0.0;
    return b;
}

}  // namespace physioml
