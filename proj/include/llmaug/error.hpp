#pragma once

#include <stdexcept>
#include <string>

namespace llmaug {

enum class ErrorKind {
  InvalidInput,
  InvalidConfig,
  BudgetExceeded,
  NoCandidate,
  Parse,
  Ingest,
  NotFound,
  PromptBudget,
  BackendUnavailable,
  RateLimited,
  MockExhausted,
  Backend,
  Training,
  TurnFailed,
  Load,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::NoCandidate: return "no-candidate";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Ingest: return "ingest";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::PromptBudget: return "prompt-budget";
    case ErrorKind::BackendUnavailable: return "backend-unavailable";
    case ErrorKind::RateLimited: return "rate-limited";
    case ErrorKind::MockExhausted: return "mock-exhausted";
    case ErrorKind::Backend: return "backend";
    case ErrorKind::Training: return "training";
    case ErrorKind::TurnFailed: return "turn-failed";
    case ErrorKind::Load: return "load";
  }
  return "unknown";
}

}  // namespace llmaug
