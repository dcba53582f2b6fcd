#pragma once

#include <stdexcept>
#include <string>

namespace mmff {

// Root of every exception the library throws. The CLI maps subclasses to
// exit codes: usage/config -> 1, data/format/io -> 2, numeric -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// Operand shapes do not conform to an operation.
class DimensionError : public UsageError {
public:
    using UsageError::UsageError;
};

class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

// An object was used in a state that does not satisfy its precondition,
// e.g. an optimizer step without populated gradients.
class StateError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class CorruptionError : public FormatError {
public:
    using FormatError::FormatError;
};

} // namespace mmff
