#ifndef ANISO_ERRORS_HPP
#define ANISO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aniso {

// Base of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// An input violates a structural constraint (exponent ordering, config field, ...).
class ValidationError : public Error
{
public:
    using Error::Error;
};

// An argument lies outside the domain of an operation (nonpositive radius, ...).
class DomainError : public Error
{
public:
    using Error::Error;
};

// A sampling point or region escapes the domain of a field.
class OutOfDomainError : public DomainError
{
public:
    using DomainError::DomainError;
};

// The numerics produced a non-finite value or failed to converge.
class NumericalError : public Error
{
public:
    using Error::Error;
};

}  // namespace aniso

#endif  // ANISO_ERRORS_HPP
