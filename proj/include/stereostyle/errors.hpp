#pragma once

#include <stdexcept>
#include <string>

namespace stereostyle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
  using Error::Error;
};

/// File is well formed but carries content we do not support.
class FormatError : public Error {
public:
  using Error::Error;
};

/// File is malformed or truncated.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Operands have incompatible shapes.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Invalid synthetic scene description.
class SpecError : public Error {
public:
  using Error::Error;
};

/// A metric was requested on input where it has no value (e.g. empty support).
class UndefinedMetricError : public Error {
public:
  using Error::Error;
};

/// Non-finite values appeared during optimization.
class DivergenceError : public Error {
public:
  DivergenceError(int step, std::string term)
      : Error("divergence at step " + std::to_string(step) + " in term '" + term + "'"),
        step_(step), term_(std::move(term)) {}

  int step() const noexcept { return step_; }
  const std::string& term() const noexcept { return term_; }

private:
  int step_;
  std::string term_;
};

/// Invalid configuration value (weights, solver settings).
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace stereostyle
