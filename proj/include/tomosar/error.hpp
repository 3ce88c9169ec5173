#pragma once

#include <stdexcept>
#include <string>

namespace tomosar {

/// Input violates a documented precondition (bad parameter value, invalid geometry).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Vector/matrix/raster sizes do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Iterative method failed: divergence, non-finite values, iteration cap, singular system.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file contents (magic, version, truncated payload).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file missing, unreadable or of the wrong kind (magic mismatch).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration: malformed JSON, unknown key, wrong value type.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace tomosar
