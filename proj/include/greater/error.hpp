#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace greater {

// Broad failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  io,          // file missing, unreadable, unwritable
  schema,      // header/schema mismatch, unknown or duplicated columns
  parse,       // malformed cell, document or record
  validation,  // a precondition on the data or parameters does not hold
  backend,     // synthesizer backend handshake, timeout or protocol failure
  state,       // operation invoked in the wrong lifecycle state
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace greater
