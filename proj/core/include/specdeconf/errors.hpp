#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace specdeconf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
  ZeroMatrix,
  InvalidRho,
  InvalidQ,
  ShapeMismatch,
  RankDeficient,
  DegenerateColumn,
  TooFewSamples,
  SingularGram,
  NotConverged,
  NonFinite,
  InfeasiblePlan,
  NotPositiveDefinite,
  SingularCovariance,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library. `index()` carries the offending
/// covariate for per-column failures (DegenerateColumn, SingularGram).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<Index> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<Index> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<Index> index_;
};

}  // namespace specdeconf
