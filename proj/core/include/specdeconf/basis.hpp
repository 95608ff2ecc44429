#pragma once

#include <span>
#include <vector>

#include "specdeconf/errors.hpp"

namespace specdeconf::basis {

inline constexpr int kDegree = 3;
inline constexpr int kMinBasisSize = 5;

/// Clamped cubic B-spline basis on a single covariate. The knot vector holds
/// the lower boundary four times, K - 4 strictly increasing interior knots and
/// the upper boundary four times.
class BasisSpec {
 public:
  explicit BasisSpec(std::vector<double> knots);

  int size() const { return static_cast<int>(knots_.size()) - kDegree - 1; }
  double lower() const { return knots_.front(); }
  double upper() const { return knots_.back(); }
  const std::vector<double>& knots() const { return knots_; }

  /// Writes the K basis values at x (clamped to [lower, upper]) into `out`
  /// and returns the index of the first of at most four nonzero entries.
  int eval_into(double x, std::span<double> out) const;

 private:
  std::vector<double> knots_;
};

/// Type-7 (linear interpolation) empirical quantile of sorted data.
double quantile_type7(std::span<const double> sorted, double level);

/// Knots at the empirical quantile levels i / (K - 3), i = 1..K-4, with the
/// boundary at min/max of x. Tied interior knots are separated by 1e-9 * range.
BasisSpec quantile_knots(std::span<const double> x, int K);
BasisSpec quantile_knots(const Vector& x, int K);

Vector eval_basis(const BasisSpec& spec, double x);

/// Row i is eval_basis(spec, x_i).
Matrix design_matrix(const Vector& x, const BasisSpec& spec);

struct OrthoBasis {
  Matrix B_tilde;  // B R^{-1}
  Matrix R;        // upper triangular, R^T R = B^T B / n + ridge_used * I
  double ridge_used = 0.0;
};

OrthoBasis orthonormalize(const Matrix& B);

/// Per-covariate quantile bases for every column of X, orthonormalized.
struct AdditiveBasis {
  int K = 0;
  std::vector<BasisSpec> specs;
  std::vector<OrthoBasis> ortho;

  Index covariates() const { return static_cast<Index>(specs.size()); }
};

/// Builds the basis for every column. `knot_rows`, when nonempty, restricts
/// knot placement and the Gram factorization to those rows while the design
/// is still evaluated on all rows.
AdditiveBasis build_additive_basis(const Matrix& X, int K,
                                   std::span<const Index> knot_rows = {});

}  // namespace specdeconf::basis
