#pragma once

#include <stdexcept>
#include <string>

namespace fdg {

// Non-finite or otherwise out-of-contract inputs to a numeric operation.
struct invalid_parameter : std::invalid_argument {
    explicit invalid_parameter(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed file content. The message names the offending element.
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// A computation left the representable/soluble regime (divergence, singular matrix).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Pure-rotation or behind-camera two-view geometry. Callers that build weight
// maps are expected to catch this and fall back to uniform weights.
struct degenerate_epipolar_error : std::runtime_error {
    explicit degenerate_epipolar_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fdg
