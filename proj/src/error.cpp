#include "greater/error.hpp"

namespace greater {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::backend: return "backend";
    case ErrorKind::state: return "state";
  }
  return "unknown";
}

}  // namespace greater
