#include "gce/error.hpp"

namespace gce {

std::string_view CategoryName(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kNumeric:
      return "numeric";
    case ErrorCategory::kData:
      return "data";
  }
  return "unknown";
}

int ExitCode(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return 2;
    case ErrorCategory::kNumeric:
      return 3;
    case ErrorCategory::kData:
      return 4;
  }
  return 1;
}

}  // namespace gce
