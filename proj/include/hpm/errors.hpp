#pragma once

#include <stdexcept>

namespace hpm {

/// Thrown when a caller violates a documented precondition.
class invalid_argument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation breaks down numerically (non-finite
/// intermediates, an eigensweep that refuses to settle, and the like).
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when an on-disk artifact cannot be parsed: malformed JSON,
/// unknown format version, missing or mistyped fields.
class format_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hpm
