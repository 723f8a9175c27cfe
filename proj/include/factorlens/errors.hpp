#pragma once

#include <stdexcept>
#include <string>

namespace factorlens {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

/// Stacked sample covariance of the data is not positive definite.
class Singular : public Error {
public:
    using Error::Error;
};

class BadDimension : public Error {
public:
    using Error::Error;
};

class BadIndex : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Bartlett factor rho of the likelihood-ratio statistic is not positive.
class DegenerateCorrection : public Error {
public:
    using Error::Error;
};

/// Too few residual degrees of freedom for the finite-sample moments.
class DegenerateDof : public Error {
public:
    using Error::Error;
};

class EmptySample : public Error {
public:
    using Error::Error;
};

class MissingNullSample : public Error {
public:
    using Error::Error;
};

class MissingCalibration : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class MissingColumn : public Error {
public:
    using Error::Error;
};

class MissingValue : public Error {
public:
    using Error::Error;
};

class TooFewRows : public Error {
public:
    using Error::Error;
};

}  // namespace factorlens
