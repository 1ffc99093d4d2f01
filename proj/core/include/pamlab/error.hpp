#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pamlab {

// Every failure surfaced by the library carries one of these classes; the CLI
// prints the class name so callers can dispatch on it.
enum class ErrorKind {
  InvalidSpec,
  InvalidArgument,
  SingularEvaluation,
  DivergentIntegral,
  NonPositiveTime,
  EmptyMeasure,
  TimeOutOfRange,
  NegativeSpectralWeight,
  GridTooCoarse,
  GridMismatch,
  InsufficientSamples,
  LagOutOfRange,
  UnstableRun,
  SurrogateBiasExceeded,
  TruncationUnreliable,
  UnsupportedKernel,
  UnboundedKernel,
  AssignmentExplosion,
  AllPathsExited,
  NoConvergence,
  DomainTooSmall,
  BadAlpha,
  NotScaling,
  AllSitesNonpositive,
  TooFewPoints,
  TooFewReplicates,
  BoundViolated,
  ConfigInvalid,
  ModuleError,
  OutputUnwritable,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace pamlab
