#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qadaa {

/// Coarse error classes. The CLI maps these onto exit codes and the
/// prediction service onto structured error bodies.
enum class ErrorCode {
  usage,          // bad arguments or configuration
  data,           // malformed input file, unknown label, shape mismatch
  invalid_input,  // request text empty after preprocessing, wrong task pairing
  not_found,      // unknown model id, missing file
  internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

[[noreturn]] inline void data_error(const std::string& message) {
  throw Error(ErrorCode::data, message);
}

[[noreturn]] inline void usage_error(const std::string& message) {
  throw Error(ErrorCode::usage, message);
}

/// Sink for non-fatal diagnostics (duplicate embedding rows, degenerate
/// metric denominators). Defaults to stderr; tests may swap it out.
using WarningSink = void (*)(std::string_view);
void set_warning_sink(WarningSink sink) noexcept;
void warn(std::string_view message);

}  // namespace qadaa
