#pragma once

#include <stdexcept>
#include <string>

namespace blowuplab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical procedure (integration, bracketing, fitting) did not succeed.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok)
        throw InvalidArgument(what);
}

} // namespace detail
} // namespace blowuplab
