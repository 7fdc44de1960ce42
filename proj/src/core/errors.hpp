#pragma once

#include <stdexcept>
#include <string>

namespace velinv {

// Values double as CLI exit codes.
enum class ErrorKind : int { Config = 2, Data = 3, Numerical = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

// Container failures, one type per failure mode.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};
class VersionError : public DataError {
 public:
  using DataError::DataError;
};
class TruncatedError : public DataError {
 public:
  using DataError::DataError;
};
class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};

class CflError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace velinv
