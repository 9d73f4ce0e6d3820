#pragma once

// Typed error hierarchy. Callers are expected to catch by type (the CLI maps
// types to exit codes; tests assert on kinds), so every failure mode that a
// contract names gets its own class or kind enum rather than a bare message.

#include <stdexcept>
#include <string>

namespace batcheval {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid run/sweep/criterion configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Dataset file violates the schema. line is 1-based; 0 means "whole file".
struct DataError : Error {
    int line = 0;
    std::string reason;
    DataError(int line_, std::string reason_)
        : Error("line " + std::to_string(line_) + ": " + reason_),
          line(line_),
          reason(std::move(reason_)) {}
    explicit DataError(std::string reason_) : Error(reason_), reason(std::move(reason_)) {}
};

// A referenced sample id has no score/quality attached to it.
struct MissingScore : Error {
    std::string id;
    explicit MissingScore(std::string id_) : Error("missing score for id '" + id_ + "'"), id(std::move(id_)) {}
};

// Judge transcript could not be converted into a full batch of scores.
struct ParseError : Error {
    enum class Kind {
        marker_not_found,   // no score list / per-sample score markers present
        count_mismatch,     // indices found do not form exactly 1..n
        duplicate_index,    // some sample index scored twice
        out_of_range,       // value beyond scale bounds by more than the clamp tolerance
        non_integer_score,  // integer format received a fractional value
    };
    Kind kind;
    int index = 0;     // offending 1-based sample index where applicable
    double value = 0;  // offending value for out_of_range / non_integer_score
    int expected = 0;  // for count_mismatch
    int found = 0;     // for count_mismatch
    ParseError(Kind k, std::string msg) : Error(std::move(msg)), kind(k) {}
};

inline const char* to_string(ParseError::Kind k) {
    switch (k) {
        case ParseError::Kind::marker_not_found: return "marker_not_found";
        case ParseError::Kind::count_mismatch: return "count_mismatch";
        case ParseError::Kind::duplicate_index: return "duplicate_index";
        case ParseError::Kind::out_of_range: return "out_of_range";
        case ParseError::Kind::non_integer_score: return "non_integer_score";
    }
    return "unknown";
}

// Judge backend failed in a way retries could not repair.
struct JudgeError : Error {
    enum class Kind {
        auth_failure,
        rate_limited,
        timeout,
        network,
        bad_response,
        budget_exceeded,
        unknown_sample,
        unavailable,
    };
    Kind kind;
    JudgeError(Kind k, std::string msg) : Error(std::move(msg)), kind(k) {}
};

inline const char* to_string(JudgeError::Kind k) {
    switch (k) {
        case JudgeError::Kind::auth_failure: return "auth_failure";
        case JudgeError::Kind::rate_limited: return "rate_limited";
        case JudgeError::Kind::timeout: return "timeout";
        case JudgeError::Kind::network: return "network";
        case JudgeError::Kind::bad_response: return "bad_response";
        case JudgeError::Kind::budget_exceeded: return "budget_exceeded";
        case JudgeError::Kind::unknown_sample: return "unknown_sample";
        case JudgeError::Kind::unavailable: return "unavailable";
    }
    return "unknown";
}

// Metric preconditions (length mismatches, empty input, bad bins, ...).
struct MetricError : Error {
    enum class Kind {
        length_mismatch,
        key_mismatch,
        empty_input,
        invalid_bin_width,
        invalid_n,
        span_out_of_range,
        non_causal_matrix,
    };
    Kind kind;
    MetricError(Kind k, std::string msg) : Error(std::move(msg)), kind(k) {}
};

}  // namespace batcheval
