#pragma once

#include <stdexcept>
#include <string>

namespace desync {

// Coarse failure classes. Each maps onto one C status code and one CLI exit code.
enum class ErrorKind {
  Config,  // malformed configuration, unknown keys, bad descriptors
  Data,    // precondition or domain violations on input data
  Io,      // filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct DomainError : DataError {
  explicit DomainError(const std::string& what) : DataError("domain error: " + what) {}
};

struct ProfileIntegrityError : DataError {
  explicit ProfileIntegrityError(const std::string& what)
      : DataError("profile integrity error: " + what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace desync
