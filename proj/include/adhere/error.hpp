#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adhere {

enum class ErrorCode {
  config,
  validation,
  not_found,
  conflict,
  day_closed,
  replay,
  idempotency,
  insufficient_data,
  degenerate_data,
  separation,
  undefined_correlation,
  domain,
  data,
  io,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so the
// HTTP layer and the CLI can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace adhere
