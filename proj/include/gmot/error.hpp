#pragma once

#include <stdexcept>
#include <string>

namespace gmot {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Io,
  Numeric,
};

/// Engine-wide exception carrying a coarse code that the C API maps to
/// status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure pointing at a 1-based line and whitespace-separated field.
class ParseError : public Error {
 public:
  ParseError(int line, int field, const std::string& msg)
      : Error(ErrorCode::Parse,
              "line " + std::to_string(line) + ", field " +
                  std::to_string(field) + ": " + msg),
        line_(line),
        field_(field) {}
  int line() const { return line_; }
  int field() const { return field_; }

 private:
  int line_;
  int field_;
};

}  // namespace gmot
