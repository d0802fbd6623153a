#pragma once

#include <stdexcept>
#include <string>

namespace fairhc {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Input errors (CLI exit code 2).
class InputError : public Error {
  public:
    using Error::Error;
};

class ParseError : public InputError {
  public:
    using InputError::InputError;
};

class SchemaError : public InputError {
  public:
    using InputError::InputError;
};

class ValidationError : public InputError {
  public:
    using InputError::InputError;
};

class UnknownBus : public InputError {
  public:
    explicit UnknownBus(const std::string& id) : InputError("unknown bus '" + id + "'") {}
};

class ParameterOutOfRange : public InputError {
  public:
    using InputError::InputError;
};

class MissingReference : public InputError {
  public:
    using InputError::InputError;
};

class TooManyLoads : public InputError {
  public:
    using InputError::InputError;
};

// Numerical failures (CLI exit code 3).
class NumericalError : public Error {
  public:
    using Error::Error;
};

class NonConvergence : public NumericalError {
  public:
    NonConvergence(const std::string& what, double last_mismatch)
        : NumericalError(what), last_mismatch_(last_mismatch) {}

    [[nodiscard]] double last_mismatch() const noexcept { return last_mismatch_; }

  private:
    double last_mismatch_;
};

class SingularJacobian : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class DegenerateFrontier : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class ZeroUtilitarianHC : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// The baseline operating point already violates the network limits (CLI exit code 1).
class Infeasible : public Error {
  public:
    using Error::Error;
};

}  // namespace fairhc
