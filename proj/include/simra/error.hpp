#pragma once

#include <stdexcept>
#include <string>

namespace simra {

enum class ErrorKind {
  Format,            // malformed input bytes
  Validation,        // well-formed but violates an invariant
  Detection,         // detector cannot run on this ride
  EmptyRide,         // a transform removed every sample
  InsufficientData,  // not enough GPS fixes for the requested analysis
  Build,             // map extract cannot be turned into a graph
  Consistency,       // matched data does not fit the graph
  UndefinedScore,    // r = 0
  Io,
  InvalidArgument,
  NotFound,
  Conflict,
  Unauthorized,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string const& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, std::string const& message);

}  // namespace simra
