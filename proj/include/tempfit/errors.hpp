#pragma once

#include <stdexcept>
#include <string>

namespace tempfit {

/// Caller supplied something that violates a documented precondition.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value or failed to converge.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tempfit
