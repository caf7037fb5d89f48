#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rollout_lab {

enum class ErrorKind {
  // domain errors (CLI exit 1)
  EnumerationCapExceeded,
  DomainMismatch,
  WindowTooSmall,
  InvalidPattern,
  InvalidNetwork,
  NoInputOutputPath,
  NonConvergence,
  MissingCost,
  ShapeMismatch,
  MissingInput,
  OutOfRange,
  // input errors (CLI exit 2)
  ParseError,
  IoError,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::EnumerationCapExceeded: return "EnumerationCapExceeded";
  case ErrorKind::DomainMismatch: return "DomainMismatch";
  case ErrorKind::WindowTooSmall: return "WindowTooSmall";
  case ErrorKind::InvalidPattern: return "InvalidPattern";
  case ErrorKind::InvalidNetwork: return "InvalidNetwork";
  case ErrorKind::NoInputOutputPath: return "NoInputOutputPath";
  case ErrorKind::NonConvergence: return "NonConvergence";
  case ErrorKind::MissingCost: return "MissingCost";
  case ErrorKind::ShapeMismatch: return "ShapeMismatch";
  case ErrorKind::MissingInput: return "MissingInput";
  case ErrorKind::OutOfRange: return "OutOfRange";
  case ErrorKind::ParseError: return "ParseError";
  case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

constexpr bool is_input_error(ErrorKind kind) {
  return kind == ErrorKind::ParseError || kind == ErrorKind::IoError;
}

/// Every failure raised by the library carries one of the ErrorKind names so
/// callers (and the CLI) can dispatch without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Parse failures remember where they happened (1-based; 0 when unknown).
class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line, std::size_t column)
      : Error(ErrorKind::ParseError, location(line, column) + what),
        line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

private:
  static std::string location(std::size_t line, std::size_t column) {
    if (line == 0)
      return {};
    return "line " + std::to_string(line) + ", column " +
           std::to_string(column) + ": ";
  }

  std::size_t line_;
  std::size_t column_;
};

} // namespace rollout_lab
