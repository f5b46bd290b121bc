#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fred {

enum class ErrorKind {
  kConfig,
  kInvalidInput,
  kTransport,
  kVerification,
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::kConfig, message) {}
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& message)
      : Error(ErrorKind::kInvalidInput, message) {}
};

// Raised by the remote predictor. [first_index, last_index] is the inclusive
// range of batch rows whose predictions could not be obtained.
class TransportError : public Error {
 public:
  TransportError(const std::string& message, std::size_t first_index,
                 std::size_t last_index)
      : Error(ErrorKind::kTransport,
              message + " (batch rows " + std::to_string(first_index) + "-" +
                  std::to_string(last_index) + ")"),
        first_index_(first_index),
        last_index_(last_index) {}

  std::size_t first_index() const noexcept { return first_index_; }
  std::size_t last_index() const noexcept { return last_index_; }

 private:
  std::size_t first_index_;
  std::size_t last_index_;
};

}  // namespace fred
