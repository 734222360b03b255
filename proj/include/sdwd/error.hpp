#pragma once
#include <stdexcept>
#include <string>

namespace sdwd {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or configuration (non-finite input, negative threshold, ...).
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// Input data cannot be used: malformed files, one class, all-constant columns.
class DataError : public Error
{
public:
    using Error::Error;
};

/// Model file with the wrong version or broken structure.
class FormatError : public DataError
{
public:
    using DataError::DataError;
};

} // namespace sdwd
