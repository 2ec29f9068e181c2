#pragma once

#include <stdexcept>
#include <string>

namespace pricopt {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text (CSV row, JSON field).
struct ParseError : Error {
    using Error::Error;
};

// Well-formed input that breaks a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Argument outside the domain of an operation (delta out of bounds, size mismatch).
struct DomainError : Error {
    using Error::Error;
};

// Operation needs derivatives but the conversion model is not differentiable.
struct UnsupportedModelError : Error {
    using Error::Error;
};

// Oracle refused an instance whose enumeration exceeds the combination cap.
struct CapExceededError : Error {
    using Error::Error;
};

} // namespace pricopt
