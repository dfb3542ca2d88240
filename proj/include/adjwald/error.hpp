#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adjwald {

enum class ErrorKind {
  NotPositiveDefinite,
  NonFiniteEvaluation,
  DomainError,
  DidNotConverge,
  InfiniteEstimate,
  GridTooNarrow,
  RefitFailures,
  ZeroVariance,
  LpCycleLimit,
  ConstrainedFitFailed,
  NegativeDeviance,
  BoundaryResponse,
  InvalidModel,
  DataError,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::DidNotConverge: return "DidNotConverge";
    case ErrorKind::InfiniteEstimate: return "InfiniteEstimate";
    case ErrorKind::GridTooNarrow: return "GridTooNarrow";
    case ErrorKind::RefitFailures: return "RefitFailures";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::LpCycleLimit: return "LpCycleLimit";
    case ErrorKind::ConstrainedFitFailed: return "ConstrainedFitFailed";
    case ErrorKind::NegativeDeviance: return "NegativeDeviance";
    case ErrorKind::BoundaryResponse: return "BoundaryResponse";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace adjwald
