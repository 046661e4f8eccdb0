#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace solistab {

/// Failure modes reported by the numerical modules.
enum class ErrorKind {
  NoBracket,
  NonConvergence,
  TailNotResolved,
  OutOfRange,
  GridTooSmall,
  QuadratureFail,
  IllConditioned,
  NotConverged,
  LeftBasin,
  SolverStalled,
  NotContracting,
  DegenerateInput,
  Discretization,
  PhaseRestrictionViolated,
  SweepInfeasible,
};

std::string_view to_string(ErrorKind kind);

/// A numerical failure that carries its kind. Precondition violations are
/// reported separately through std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::TailNotResolved: return "TailNotResolved";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::GridTooSmall: return "GridTooSmall";
    case ErrorKind::QuadratureFail: return "QuadratureFail";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::LeftBasin: return "LeftBasin";
    case ErrorKind::SolverStalled: return "SolverStalled";
    case ErrorKind::NotContracting: return "NotContracting";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::Discretization: return "Discretization";
    case ErrorKind::PhaseRestrictionViolated: return "PhaseRestrictionViolated";
    case ErrorKind::SweepInfeasible: return "SweepInfeasible";
  }
  return "Unknown";
}

}  // namespace solistab
