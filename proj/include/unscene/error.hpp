#pragma once

#include <stdexcept>
#include <string>

namespace unscene {

enum class ErrorKind {
  argument,
  schema,
  integrity,
  coverage,
  generation,
  io,
  not_found,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for the library; `kind` drives the C status code.
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

}  // namespace unscene
