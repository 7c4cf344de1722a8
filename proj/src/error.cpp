#include "unscene/error.hpp"

namespace unscene {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::schema: return "schema";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::generation: return "generation";
    case ErrorKind::io: return "io";
    case ErrorKind::not_found: return "not_found";
  }
  return "unknown";
}

}  // namespace unscene
