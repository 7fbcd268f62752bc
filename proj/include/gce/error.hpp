#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gce {

/// Broad failure classes. The CLI maps them onto process exit codes.
enum class ErrorCategory {
  kConfig,   // bad arguments, missing files, inconsistent shapes
  kNumeric,  // non-finite values, divergence, unsatisfiable search
  kData,     // malformed input files
};

std::string_view CategoryName(ErrorCategory category);
int ExitCode(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void ThrowConfig(const std::string& what) {
  throw Error(ErrorCategory::kConfig, what);
}
[[noreturn]] inline void ThrowNumeric(const std::string& what) {
  throw Error(ErrorCategory::kNumeric, what);
}
[[noreturn]] inline void ThrowData(const std::string& what) {
  throw Error(ErrorCategory::kData, what);
}

}  // namespace gce
