#pragma once

#include <stdexcept>
#include <string>

namespace geodesign {

// Machine-readable failure categories. The CLI maps these onto exit codes and
// a structured stderr line; library callers can switch on category() instead
// of parsing messages.
enum class ErrorCategory {
  usage,            // bad flags / unknown subcommand
  config,           // malformed or inconsistent configuration
  data,             // input data fails validation (bad CSV, gaps, negatives)
  infeasible,       // no design satisfies the requested constraints
  estimation,       // estimator could not produce a point estimate
  no_spend_signal,  // all spend differences are zero; iROAS is undefined
  internal,         // invariant violation; indicates a bug
};

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::config: return "config";
    case ErrorCategory::data: return "data";
    case ErrorCategory::infeasible: return "infeasible";
    case ErrorCategory::estimation: return "estimation";
    case ErrorCategory::no_spend_signal: return "no_spend_signal";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace geodesign
