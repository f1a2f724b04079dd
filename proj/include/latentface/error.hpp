#pragma once

#include <stdexcept>
#include <string>

namespace latentface {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatches, out-of-range modes or indices, bad parameter values.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a numerical breakdown during optimization.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A stated invariant of a fitted object does not hold.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Container decoding failures. Each failure mode has its own type.
class FormatError : public IoError {
public:
    using IoError::IoError;
};
class BadMagicError : public FormatError {
public:
    using FormatError::FormatError;
};
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};
class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};
class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};
class NonFiniteError : public FormatError {
public:
    using FormatError::FormatError;
};
class RecordKindError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Dataset labels do not match a required grid layout.
class LayoutError : public Error {
public:
    using Error::Error;
};

}  // namespace latentface
