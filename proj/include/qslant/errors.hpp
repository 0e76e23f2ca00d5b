#pragma once

#include <stdexcept>
#include <string>

namespace qslant {

// Broad failure classes, used by the CLI to pick an exit status.
enum class ErrorKind {
    input,        // bad file, bad expression, unbound parameter, bad config
    numeric,      // non-convergence, ambiguous rank, rank changes under perturbation
    unsupported,  // a valid request this build cannot serve (e.g. no smooth frames)
    internal,     // invariant violated; indicates a bug
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(std::string message) : Error(ErrorKind::input, std::move(message)) {}
};

class NumericError : public Error {
public:
    explicit NumericError(std::string message) : Error(ErrorKind::numeric, std::move(message)) {}
};

// The rank of a differential cannot be pinned down at the requested point:
// singular values straddle the zero threshold, or it changes between nearby
// evaluation points.
class AmbiguousRankError : public NumericError {
public:
    explicit AmbiguousRankError(std::string message) : NumericError(std::move(message)) {}
};

class ConstantRankViolation : public NumericError {
public:
    explicit ConstantRankViolation(std::string message) : NumericError(std::move(message)) {}
};

class UnsupportedInputError : public Error {
public:
    explicit UnsupportedInputError(std::string message)
        : Error(ErrorKind::unsupported, std::move(message)) {}
};

class UndefinedOperationError : public Error {
public:
    explicit UndefinedOperationError(std::string message)
        : Error(ErrorKind::unsupported, std::move(message)) {}
};

class StructuralInconsistency : public Error {
public:
    explicit StructuralInconsistency(std::string message)
        : Error(ErrorKind::internal, std::move(message)) {}
};

class EvalError : public Error {
public:
    explicit EvalError(std::string message) : Error(ErrorKind::input, std::move(message)) {}
};

}  // namespace qslant
