// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace affinelab {

/// Machine-readable failure categories. The CLI maps these onto exit codes.
enum class ErrorCode {
  dimension,        // mismatched jet shapes, n out of range
  evaluation,       // function evaluated outside its domain
  degenerate_frame, // tangent frame or linear system singular at the base point
  convexity,        // second fundamental form is indefinite
  order,            // jet order too small for the requested quantity
  syntax,           // DSL parse failure
  semantic,         // DSL well-formed but invalid (unbound name, wrong arity)
  parameter,        // family parameters violate their constraints
  structure,        // expected eigenstructure not present
  io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension: return "dimension_error";
    case ErrorCode::evaluation: return "evaluation_error";
    case ErrorCode::degenerate_frame: return "degenerate_frame";
    case ErrorCode::convexity: return "convexity_error";
    case ErrorCode::order: return "order_error";
    case ErrorCode::syntax: return "syntax_error";
    case ErrorCode::semantic: return "semantic_error";
    case ErrorCode::parameter: return "parameter_error";
    case ErrorCode::structure: return "structure_mismatch";
    case ErrorCode::io: return "io_error";
  }
  return "unknown_error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures caused by the numbers at a sample point rather than by
  /// the user's input.
  bool is_numerical() const noexcept {
    return code_ == ErrorCode::degenerate_frame || code_ == ErrorCode::convexity ||
           code_ == ErrorCode::evaluation;
  }

 private:
  ErrorCode code_;
};

/// Parse failures carry a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& message, int line, int column)
      : Error(code, std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace affinelab
