#pragma once

#include <stdexcept>
#include <string>

namespace netoed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed config, empty sets, mismatched lengths, bad files.
class InputError : public Error {
public:
    using Error::Error;
};

/// A query fell outside the domain a model was fitted on.
class OutOfDomainError : public InputError {
public:
    using InputError::InputError;
};

/// Linear algebra or probability breakdown (singular covariance, no posterior mass).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// No feasible sensor location exists in the requested placement region.
class InfeasibleRegionError : public Error {
public:
    using Error::Error;
};

}  // namespace netoed
