#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace actgov {

enum class ErrorKind {
  Argument,
  EmptySet,
  Unbounded,
  Numerical,
  Instability,
  NoStabilizingSolution,
  ConstructionInfeasible,
  NonDetermination,
  InfeasibleState,
  UninitializedGovernor,
  SeedConstruction,
  Singularity,
  Config,
};

inline constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Argument: return "argument";
    case ErrorKind::EmptySet: return "empty_set";
    case ErrorKind::Unbounded: return "unbounded";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::NoStabilizingSolution: return "no_stabilizing_solution";
    case ErrorKind::ConstructionInfeasible: return "construction_infeasible";
    case ErrorKind::NonDetermination: return "non_determination";
    case ErrorKind::InfeasibleState: return "infeasible_state";
    case ErrorKind::UninitializedGovernor: return "uninitialized_governor";
    case ErrorKind::SeedConstruction: return "seed_construction";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers (and the
/// CLI's machine-readable error line) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace actgov
