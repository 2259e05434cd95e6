#pragma once

#include <stdexcept>
#include <string>

namespace cvl {

// Caller passed arguments whose shapes do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input data violates a documented precondition (degenerate, non-finite, misaligned).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An intermediate artifact was produced under a different configuration.
class StaleInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training diverged or otherwise failed to produce a usable model.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what)
{
    if (!ok) throw DimensionError(what);
}

} // namespace detail
} // namespace cvl
