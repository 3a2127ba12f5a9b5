#pragma once

#include <stdexcept>
#include <string>

namespace crydet {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed container / unreadable bytes.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Recognized container, codec we do not handle.
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

// Input does not match the DSP profile it is paired with.
class ProfileMismatchError : public Error {
 public:
  using Error::Error;
};

// Text input (CSV, config) that fails to parse; carries a line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Parsed fine, but violates a dataset/schema invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes that cannot be combined.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Binary file with bad magic/version/shape table.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Bad CLI flags or config keys/values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace crydet
