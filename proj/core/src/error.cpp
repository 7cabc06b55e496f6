#include "nidsgen/error.hpp"

namespace nidsgen {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::unknown_magic: return "UnknownMagic";
        case ErrorCode::truncated_header: return "TruncatedHeader";
        case ErrorCode::empty_flow: return "EmptyFlow";
        case ErrorCode::schema_mismatch: return "SchemaMismatch";
        case ErrorCode::malformed_rule: return "MalformedRule";
        case ErrorCode::target_exceeds_population: return "TargetExceedsPopulation";
        case ErrorCode::header_mismatch: return "HeaderMismatch";
        case ErrorCode::ragged_row: return "RaggedRow";
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::unknown_attack: return "UnknownAttack";
        case ErrorCode::k_out_of_range: return "KOutOfRange";
        case ErrorCode::single_class_labels: return "SingleClassLabels";
        case ErrorCode::schema_incompatible: return "SchemaIncompatible";
        case ErrorCode::attack_absent: return "AttackAbsent";
        case ErrorCode::io_error: return "IoError";
        case ErrorCode::invalid_argument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace nidsgen
