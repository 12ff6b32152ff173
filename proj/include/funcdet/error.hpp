#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace funcdet {

/// Broad failure category; the CLI maps it onto an exit code.
enum class ErrorKind {
  Validation,   // malformed input, ill-posed or unsupported problem
  Computation,  // numerical failure or a refused computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Stable machine-readable identifier, e.g. "parse_error".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(ErrorKind::Validation, "parse_error",
              message + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::Validation, "config_error", message) {}
};

class UnsupportedBoundary : public Error {
 public:
  explicit UnsupportedBoundary(const std::string& message)
      : Error(ErrorKind::Validation, "unsupported_boundary", message) {}
};

class IntegrationError : public Error {
 public:
  explicit IntegrationError(const std::string& message)
      : Error(ErrorKind::Computation, "integration_error", message) {}
};

class ZeroModeDetected : public Error {
 public:
  explicit ZeroModeDetected(const std::string& message)
      : Error(ErrorKind::Computation, "zero_mode_detected", message) {}
};

class DegenerateZeroMode : public Error {
 public:
  explicit DegenerateZeroMode(const std::string& message)
      : Error(ErrorKind::Computation, "degenerate_zero_mode", message) {}
};

class NoInvertibleSplit : public Error {
 public:
  explicit NoInvertibleSplit(const std::string& message)
      : Error(ErrorKind::Computation, "no_invertible_split", message) {}
};

/// Generic numerical refusal (degenerate data, failed fit, scan budget, ...).
class ComputationError : public Error {
 public:
  ComputationError(std::string code, const std::string& message)
      : Error(ErrorKind::Computation, std::move(code), message) {}
};

}  // namespace funcdet
