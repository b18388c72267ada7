#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prosim {

enum class ErrorKind {
  InvalidSpec,        // population / catalog / config contents violate an invariant
  InvalidParameters,  // bad numeric arguments to a pure operation
  ParseFailure,       // backend answer could not be interpreted
  MissingCredential,
  TransportFailure,   // HTTP / socket level failure, carries status when known
  ExhaustedRetries,
  DegenerateInput,    // statistics on too few points or zero variance
  SingularMatrix,
  EmptyCell,
  GridMismatch,
  DataError,          // malformed or missing input files
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::InvalidParameters: return "invalid-parameters";
    case ErrorKind::ParseFailure: return "parse-failure";
    case ErrorKind::MissingCredential: return "missing-credential";
    case ErrorKind::TransportFailure: return "transport-failure";
    case ErrorKind::ExhaustedRetries: return "exhausted-retries";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::SingularMatrix: return "singular-matrix";
    case ErrorKind::EmptyCell: return "empty-cell";
    case ErrorKind::GridMismatch: return "grid-mismatch";
    case ErrorKind::DataError: return "data-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

  /// True for failures that originate in a decision backend.
  bool is_backend_failure() const noexcept {
    return kind_ == ErrorKind::TransportFailure || kind_ == ErrorKind::ExhaustedRetries ||
           kind_ == ErrorKind::MissingCredential || kind_ == ErrorKind::ParseFailure;
  }

 private:
  ErrorKind kind_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace prosim
