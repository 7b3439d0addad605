#pragma once

#include <stdexcept>
#include <string>

namespace tsnmf {

// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorKind { usage, data, numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Malformed, truncated or non-finite input data.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

const char* to_string(ErrorKind kind);

}  // namespace tsnmf
