#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace boocap {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input bytes (JSON, CSV, split files, checkpoints).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset_(byte_offset) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t byte_offset() const { return offset_; }

 private:
  std::size_t offset_ = 0;
};

/// Well-formed input that violates a data invariant (unknown ids, bad boxes, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or divergence during numeric work.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace boocap
