#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arete {

// Every recoverable failure in the pipeline carries one of these codes so
// callers (and the CLI exit-code mapping) can react without string matching.
enum class ErrorCode {
    // document handling
    file_not_found,
    unsupported_format,
    pdf_no_text_layer,
    empty_document,
    // LLM gateway
    auth_error,
    rate_limit_exhausted,
    timeout,
    malformed_response,
    fixture_missing,
    // table parsing
    no_table_found,
    out_of_range,
    // geometry / grids
    empty_input,
    longitude_span_too_wide,
    empty_grid,
    invalid_grid,
    outside_grid,
    // outlier detection
    dimension_mismatch,
    degenerate_classes,
    insufficient_points,
    missing_grid,
    // validation
    empty_reference,
    no_coordinate_data,
    score_out_of_range,
    schema_mismatch,
    // generic
    io_error,
    network_error,
    api_error,
    invalid_argument,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::file_not_found: return "file_not_found";
        case ErrorCode::unsupported_format: return "unsupported_format";
        case ErrorCode::pdf_no_text_layer: return "pdf_no_text_layer";
        case ErrorCode::empty_document: return "empty_document";
        case ErrorCode::auth_error: return "auth_error";
        case ErrorCode::rate_limit_exhausted: return "rate_limit_exhausted";
        case ErrorCode::timeout: return "timeout";
        case ErrorCode::malformed_response: return "malformed_response";
        case ErrorCode::fixture_missing: return "fixture_missing";
        case ErrorCode::no_table_found: return "no_table_found";
        case ErrorCode::out_of_range: return "out_of_range";
        case ErrorCode::empty_input: return "empty_input";
        case ErrorCode::longitude_span_too_wide: return "longitude_span_too_wide";
        case ErrorCode::empty_grid: return "empty_grid";
        case ErrorCode::invalid_grid: return "invalid_grid";
        case ErrorCode::outside_grid: return "outside_grid";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::degenerate_classes: return "degenerate_classes";
        case ErrorCode::insufficient_points: return "insufficient_points";
        case ErrorCode::missing_grid: return "missing_grid";
        case ErrorCode::empty_reference: return "empty_reference";
        case ErrorCode::no_coordinate_data: return "no_coordinate_data";
        case ErrorCode::score_out_of_range: return "score_out_of_range";
        case ErrorCode::schema_mismatch: return "schema_mismatch";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::network_error: return "network_error";
        case ErrorCode::api_error: return "api_error";
        case ErrorCode::invalid_argument: return "invalid_argument";
    }
    return "unknown";
}

} // namespace arete
