/// @file  errors.hpp
/// @brief Exception hierarchy shared by all tuq components.

#pragma once

#include <stdexcept>
#include <string>

namespace tuq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two distances from a common anchor are exactly equal, so the true
/// orientation of a comparison is undefined.
class TieError : public Error {
public:
    using Error::Error;
};

/// An input value lies outside the mathematical domain of an operation
/// (e.g. a zero distance fed into the log-normal noise model).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A text file could not be parsed; the message carries the position.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A point index is out of range for the declared point count.
class IndexError : public Error {
public:
    using Error::Error;
};

/// A matrix does not have the rank an operation requires.
class RankError : public Error {
public:
    using Error::Error;
};

/// The requested combination of options has no defined semantics.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// A floating-point computation produced a non-finite intermediate.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An embedding was requested from an empty triplet set.
class EmptyTripletsError : public Error {
public:
    using Error::Error;
};

/// A configuration is degenerate (zero-norm embedding, coincident
/// normalization anchors, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// An iterative routine failed to terminate within its safety bound.
class NonTerminationError : public Error {
public:
    using Error::Error;
};

/// Point statistics were requested from an unaligned bootstrap ensemble.
class NotAlignedError : public Error {
public:
    using Error::Error;
};

/// An abstention threshold outside (0.5, 1] was supplied.
class ThresholdError : public Error {
public:
    using Error::Error;
};

/// More comparisons were requested than exist.
class BatchTooLargeError : public Error {
public:
    using Error::Error;
};

/// Two matrices that must agree in shape do not.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A neighborhood graph has more connected components than clusters.
class DisconnectedGraphError : public Error {
public:
    using Error::Error;
};

/// A covariance matrix stayed indefinite after jitter escalation.
class CholeskyError : public Error {
public:
    using Error::Error;
};

/// An experiment or CLI configuration is inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Generic precondition violation not covered by a more specific type.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

} // namespace tuq
