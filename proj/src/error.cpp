#include "mpsxai/error.hpp"

namespace mpsxai {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::ImpossibleEvidence: return "impossible evidence";
    case ErrorKind::StateSpaceTooLarge: return "state space too large";
    case ErrorKind::Io: return "io error";
  }
  return "unknown error";
}

}  // namespace mpsxai
