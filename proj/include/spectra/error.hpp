#pragma once

#include <stdexcept>
#include <string>

namespace spectra {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NotConvergedError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

class SingularError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (branch cut,
// invalid regime, degenerate input).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Quadrature or root-selection result failed its self-consistency check.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectra
