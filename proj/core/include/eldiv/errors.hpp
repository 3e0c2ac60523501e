#pragma once

#include <stdexcept>
#include <string>

namespace eldiv {

// Base class for every error raised by this library.  Callers that want a
// single catch-all (e.g. the CLI, or a Monte Carlo driver counting failed
// replications) can catch this type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A parameter value lies outside the model's declared domain.
class ParameterOutOfDomain : public Error {
public:
    using Error::Error;
};

// Non-finite values were produced while evaluating model functions.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

// The zero vector is not in the interior of the convex hull of the
// estimating-function values, so no weight vector can satisfy the moment
// condition at this parameter value.
class InfeasibleTheta : public Error {
public:
    using Error::Error;
};

// An iterative routine hit its iteration cap before meeting its tolerance.
class MaxIterations : public Error {
public:
    using Error::Error;
};

// An optimizer terminated without meeting its convergence criterion.
class NoConvergence : public Error {
public:
    using Error::Error;
};

// No parameter value satisfying the constraint set could be located.
class InfeasibleConstraint : public Error {
public:
    using Error::Error;
};

// A candidate solution drives some implied empirical weight outside (0, 1).
class WeightViolation : public Error {
public:
    using Error::Error;
};

// A matrix that must be inverted is singular or numerically near-singular.
class SingularMatrix : public Error {
public:
    using Error::Error;
};

// A variance-type quantity that must be positive is zero (e.g. a sample of
// identical observations).
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

// A root-bracketing search failed to find a sign change.
class NoBracket : public Error {
public:
    using Error::Error;
};

// The sample's dimensions do not match what the model expects.
class SampleMismatch : public Error {
public:
    using Error::Error;
};

// An argument lies outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed input data (CSV parsing and similar).
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace eldiv
