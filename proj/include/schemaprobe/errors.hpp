#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace schemaprobe {

/// Input violates a domain invariant (bad index, empty question, tau out of range ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File contents do not follow the expected encoding.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// JSON text that failed to parse; carries the byte offset reported by the parser.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : FormatError(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Binary payload shorter than its header promises.
class TruncatedError : public FormatError {
 public:
  TruncatedError(const std::string& what, std::size_t expected, std::size_t actual)
      : FormatError(what), expected_(expected), actual_(actual) {}
  std::size_t expected_bytes() const noexcept { return expected_; }
  std::size_t actual_bytes() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// Point outside the open unit ball handed to a hyperbolic operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite intermediate inside a numeric kernel.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace schemaprobe
