#include "pamlab/error.hpp"

namespace pamlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::SingularEvaluation: return "SingularEvaluation";
    case ErrorKind::DivergentIntegral: return "DivergentIntegral";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::EmptyMeasure: return "EmptyMeasure";
    case ErrorKind::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorKind::NegativeSpectralWeight: return "NegativeSpectralWeight";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::LagOutOfRange: return "LagOutOfRange";
    case ErrorKind::UnstableRun: return "UnstableRun";
    case ErrorKind::SurrogateBiasExceeded: return "SurrogateBiasExceeded";
    case ErrorKind::TruncationUnreliable: return "TruncationUnreliable";
    case ErrorKind::UnsupportedKernel: return "UnsupportedKernel";
    case ErrorKind::UnboundedKernel: return "UnboundedKernel";
    case ErrorKind::AssignmentExplosion: return "AssignmentExplosion";
    case ErrorKind::AllPathsExited: return "AllPathsExited";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DomainTooSmall: return "DomainTooSmall";
    case ErrorKind::BadAlpha: return "BadAlpha";
    case ErrorKind::NotScaling: return "NotScaling";
    case ErrorKind::AllSitesNonpositive: return "AllSitesNonpositive";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::TooFewReplicates: return "TooFewReplicates";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::ModuleError: return "ModuleError";
    case ErrorKind::OutputUnwritable: return "OutputUnwritable";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace pamlab
