#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace acnn {

/// Broad failure classes; the CLI maps each to a one-line diagnostic and exit code.
enum class ErrorCategory {
  invalid_argument,
  shape_mismatch,
  numeric,
  format,
  io,
  training_diverged,
};

inline std::string_view category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::shape_mismatch: return "shape-mismatch";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::format: return "format";
    case ErrorCategory::io: return "io";
    case ErrorCategory::training_diverged: return "training-diverged";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) { throw Error(c, what); }

inline void require(bool cond, ErrorCategory c, const std::string& what) {
  if (!cond) fail(c, what);
}

}  // namespace acnn
