#pragma once

#include <stdexcept>
#include <string>

namespace agr {

enum class ErrorKind {
  Config,     // invalid parameters or flags
  Integrity,  // checkpoint / dataset fingerprint mismatch
  Lookup,     // unknown user, item, or keyword
  Parse,      // malformed input file
  Numeric,    // non-finite values during propagation or training
  Io,         // filesystem failure
  Backend,    // vision-language backend transport failure (retryable)
  Extraction, // backend answered but no keywords could be parsed
  Invalid,    // violated precondition
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error kind: 2 config, 3 integrity, 4 lookup, 1 other.
inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Integrity:
      return 3;
    case ErrorKind::Lookup:
      return 4;
    default:
      return 1;
  }
}

}  // namespace agr
