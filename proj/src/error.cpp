#include "simra/error.hpp"

namespace simra {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Detection: return "detection error";
    case ErrorKind::EmptyRide: return "empty ride";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Build: return "build error";
    case ErrorKind::Consistency: return "consistency error";
    case ErrorKind::UndefinedScore: return "undefined score";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::NotFound: return "not found";
    case ErrorKind::Conflict: return "conflict";
    case ErrorKind::Unauthorized: return "unauthorized";
  }
  return "error";
}

void fail(ErrorKind kind, std::string const& message) {
  throw Error(kind, message);
}

}  // namespace simra
