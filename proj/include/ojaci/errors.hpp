#pragma once

#include <stdexcept>
#include <string>

namespace ojaci {

/// Bad input: violated precondition, malformed file, unknown option.
/// The CLI maps this to exit code 1.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that could not complete (non-convergence, degenerate gap,
/// vanished iterate). The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace ojaci
