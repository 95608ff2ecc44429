#pragma once

#include <span>

#include "specdeconf/errors.hpp"

namespace specdeconf::spectral {

/// Thin SVD X = U diag(d) V^T with r = min(n, p) retained directions.
struct SvdResult {
  Matrix U;  // n x r, orthonormal columns
  Vector d;  // r singular values, nonincreasing
  Matrix V;  // p x r, empty unless requested

  Index rank_bound() const { return d.size(); }
};

SvdResult thin_svd(const Matrix& X, bool with_v = false);

/// Singular values below this fraction of d_1 count as zero.
inline constexpr double kRelativeZero = 1e-12;

enum class TransformKind { Trim, Pca, Identity };

/// Symmetric shrinkage operator Q = U diag(shrink) U^T + (I - U U^T), kept in
/// factored form. Only directions with shrink < 1 participate in `apply`.
class SpectralTransform {
 public:
  static SpectralTransform identity(Index n);

  SpectralTransform(TransformKind kind, double parameter, Matrix U, Vector shrink);

  TransformKind kind() const { return kind_; }
  /// rho for Trim, q for Pca, 0 for Identity.
  double parameter() const { return parameter_; }
  Index n() const { return n_; }
  const Matrix& basis() const { return U_; }
  const Vector& shrink() const { return shrink_; }

  /// Q M = M - U diag(1 - shrink) U^T M; O(n r m), never forms Q.
  Matrix apply(const Matrix& M) const;
  Vector apply(const Vector& v) const;

  /// n x n materialization; meant for small-n cross-checks.
  Matrix dense() const;

 private:
  TransformKind kind_;
  double parameter_;
  Index n_;
  Matrix U_;
  Vector shrink_;
  Matrix active_U_;     // columns of U with shrink < 1
  Vector active_loss_;  // matching 1 - shrink
};

SpectralTransform trim_transform(const Matrix& X, double rho = 0.5);
SpectralTransform trim_transform(const SvdResult& svd, double rho = 0.5);

SpectralTransform pca_transform(const Matrix& X, Index q);
SpectralTransform pca_transform(const SvdResult& svd, Index q);

/// argmax_{l = 1..ceil(r/2)} d_l^2 / d_{l+1}^2, returned 1-based. A zero
/// d_{l+1} makes the ratio infinite and the smallest such l wins.
Index eigenvalue_ratio_q(const Matrix& X);
Index eigenvalue_ratio_q(std::span<const double> singular_values);

}  // namespace specdeconf::spectral
