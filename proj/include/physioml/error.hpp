#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace physioml {

/// Failure categories raised across the library. One enum keeps error
/// discrimination cheap at call sites; the message carries specifics.
enum class Errc {
    non_finite,
    non_positive_rate,
    empty_trace,
    too_short,
    wrong_modality,
    no_beats_found,
    too_few_beats,
    span_too_short,
    phase_too_short,
    insufficient_beats,
    degenerate_spectrum,
    empty_input,
    missing_file,
    parse_error,
    scheme_mismatch,
    rate_missing,
    invalid_config,
    io_error,
    scheme_range_violation,
    minority_too_small,
    single_class,
    dimension_mismatch,
    model_missing,
    empty_grid,
    too_few_samples,
    too_few_participants,
    same_corpus,
    single_class_test,
    held_out_not_found,
    length_mismatch,
    rank_deficient,
    too_few_groups,
    not_converged,
};

class Error : public std::runtime_error {
public:
    static constexpr std::size_t no_index = static_cast<std::size_t>(-1);

    Error(Errc code, std::string message, std::size_t index = no_index)
        : std::runtime_error(std::move(message)), code_(code), index_(index) {}

    Errc code() const noexcept { return code_; }

    /// Sample index, file line, or column number, when the failure has one.
    std::size_t index() const noexcept { return index_; }

private:
    Errc code_;
    std::size_t index_;
};

}  // namespace physioml
