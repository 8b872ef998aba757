#pragma once

#include <stdexcept>
#include <string>

namespace grushin {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: outside the documented domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// A numerical certificate or cross-check did not hold.
class CheckFailed : public Error {
public:
    using Error::Error;
};

// Iteration, extrapolation or integration failed to converge.
class NonConvergence : public Error {
public:
    using Error::Error;
};

class UnsupportedConfiguration : public Error {
public:
    using Error::Error;
};

// Something that the theory says cannot happen did happen.
class InternalConsistencyError : public Error {
public:
    using Error::Error;
};

// The Frobenius recursion hit a resonance but log terms were disallowed.
class ResonantCaseError : public Error {
public:
    using Error::Error;
};

class DegenerateDenominator : public Error {
public:
    using Error::Error;
};

class IntegrabilityViolation : public Error {
public:
    using Error::Error;
};

class InvalidConnection : public Error {
public:
    using Error::Error;
};

class WeightOnSpectrum : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace grushin
