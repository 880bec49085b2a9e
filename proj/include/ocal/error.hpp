#pragma once

#include <stdexcept>
#include <string>

namespace ocal {

enum class ErrorCode {
  invalid_argument,
  io,
  parse,
  infeasible,
  solver,
  unsupported,
  internal,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable category. Every failure raised by
/// the library is an ocal::Error; the C API maps the code to ocal_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace ocal
