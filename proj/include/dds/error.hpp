#pragma once

#include <stdexcept>
#include <string>

namespace dds {

// Error categories surfaced by the CLI as machine-readable strings.
enum class ErrorCategory { Usage, Config, Data, Io, Divergence, Internal };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return "usage";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Divergence: return "divergence";
    case ErrorCategory::Internal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace dds
