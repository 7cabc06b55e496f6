#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nidsgen {

enum class ErrorCode {
    // pcap-decode
    unknown_magic,
    truncated_header,
    // flow-features
    empty_flow,
    schema_mismatch,
    // labeling
    malformed_rule,
    target_exceeds_population,
    // dataset-ops
    header_mismatch,
    ragged_row,
    parse_error,
    unknown_attack,
    // feature-selection
    k_out_of_range,
    // metrics
    single_class_labels,
    // experiments
    schema_incompatible,
    attack_absent,
    // shared
    io_error,
    invalid_argument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure the library reports on bad input data or bad arguments.
/// Anything else escaping the library is an internal error.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace nidsgen
