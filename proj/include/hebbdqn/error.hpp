#pragma once

#include <stdexcept>
#include <string>

namespace hebbdqn {

enum class ErrorKind {
  kValidation,  // input data violates a documented invariant
  kParse,       // malformed document (JSON, config, CSV)
  kShape,       // tensor shape mismatch
  kState,       // operation called in the wrong lifecycle state
  kIo,          // file system failure
  kUsage,       // bad argument from a caller
  kRuntime,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace hebbdqn
