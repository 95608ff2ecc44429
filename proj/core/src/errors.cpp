#include "specdeconf/errors.hpp"

namespace specdeconf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::InvalidRho: return "InvalidRho";
    case ErrorCode::InvalidQ: return "InvalidQ";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InfeasiblePlan: return "InfeasiblePlan";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what, std::optional<Index> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code),
      index_(index) {}

}  // namespace specdeconf
