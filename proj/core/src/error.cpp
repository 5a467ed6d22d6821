#include "qadaa/error.hpp"

#include <atomic>
#include <iostream>

namespace qadaa {

namespace {

void stderr_sink(std::string_view message) {
  std::cerr << "warning: " << message << '\n';
}

std::atomic<WarningSink> g_sink{&stderr_sink};

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::usage: return "usage";
    case ErrorCode::data: return "data";
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

void set_warning_sink(WarningSink sink) noexcept {
  g_sink.store(sink ? sink : &stderr_sink);
}

void warn(std::string_view message) { g_sink.load()(message); }

}  // namespace qadaa
