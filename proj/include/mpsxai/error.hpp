#pragma once

#include <stdexcept>
#include <string>

namespace mpsxai {

enum class ErrorKind {
  Dimension,
  InvalidArgument,
  Parse,
  Config,
  Numeric,
  ImpossibleEvidence,
  StateSpaceTooLarge,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the core library. The C API maps `kind()` onto a
// status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mpsxai
