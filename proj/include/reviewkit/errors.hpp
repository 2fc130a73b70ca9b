#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace reviewkit {

enum class ErrorKind {
  UnknownStatusString,
  SchemaViolation,
  TransportError,
  AuthError,
  RateLimited,
  ClockSkew,
  KeyMismatch,
  UnknownPaper,
  EmptyYear,
  DegenerateFit,
  EmptyInput,
  MissingPhaseDates,
  NothingToExport,
  UnknownFigure,
  InvalidSpec,
  InvalidConfig,
  ParseFailure,
  IoFailure,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::UnknownStatusString: return "UnknownStatusString";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::TransportError: return "TransportError";
    case ErrorKind::AuthError: return "AuthError";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::ClockSkew: return "ClockSkew";
    case ErrorKind::KeyMismatch: return "KeyMismatch";
    case ErrorKind::UnknownPaper: return "UnknownPaper";
    case ErrorKind::EmptyYear: return "EmptyYear";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::MissingPhaseDates: return "MissingPhaseDates";
    case ErrorKind::NothingToExport: return "NothingToExport";
    case ErrorKind::UnknownFigure: return "UnknownFigure";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ParseFailure: return "ParseFailure";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace reviewkit
