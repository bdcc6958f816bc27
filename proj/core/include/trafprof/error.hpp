#pragma once

#include <stdexcept>
#include <string>

namespace trafprof {

/// Errors caused by bad input data or configuration. The CLI maps these to
/// exit code 2; anything deriving from std::logic_error is an internal
/// invariant violation (exit 70).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TruncatedFile : public DataError {
public:
    using DataError::DataError;
};

class BadMagic : public DataError {
public:
    using DataError::DataError;
};

class UnsupportedLinkType : public DataError {
public:
    using DataError::DataError;
};

class EmptyStream : public DataError {
public:
    using DataError::DataError;
};

class BadLength : public DataError {
public:
    using DataError::DataError;
};

class EmptyClass : public DataError {
public:
    using DataError::DataError;
};

class EmptyTraining : public DataError {
public:
    using DataError::DataError;
};

class BadConfig : public DataError {
public:
    using DataError::DataError;
};

/// Tensor shapes disagree. A programming error, not a data error.
class ShapeMismatch : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace trafprof
