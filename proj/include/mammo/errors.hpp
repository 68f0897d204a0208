#pragma once

#include <stdexcept>
#include <string>

namespace mammo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a precondition (shape mismatch, empty batch, bad argument).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input data cannot be processed (invalid label, degenerate sample, too few images).
class DataError : public Error {
public:
    using Error::Error;
};

/// An experiment or model configuration is inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Optimisation produced a non-finite value.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// I/O failure, always names the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mammo
