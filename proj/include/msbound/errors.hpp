#pragma once

#include <stdexcept>
#include <string>

namespace msbound {

enum class ErrorKind {
  kInvalidArgument,
  kRankDeficient,
  kHypothesisViolation,
  kNotStabilizable,
  kInsufficientAuthority,
  kNumericalFailure,
  kContractViolation,
  kInvalidConfig,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Exception carrying a machine-readable category. The CLI maps each
/// category to a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace msbound
