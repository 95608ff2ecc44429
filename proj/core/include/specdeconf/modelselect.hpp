#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "specdeconf/hdam.hpp"

namespace specdeconf::modelselect {

/// `count` points from hi down to lo, equally spaced on the log scale.
std::vector<double> geometric_grid(double hi, double lo, int count);

struct CvPlan {
  int folds = 5;
  std::vector<int> K_grid{5, 7, 9, 12, 15};
  /// Multipliers of lambda_max(K) for the coarse stage, in (0, 1].
  std::vector<double> lambda_multipliers = geometric_grid(1.0, 1e-3, 10);
  /// Points of the fine stage-2 grid; 0 skips stage 2.
  int lambda_fine_count = 30;
  std::uint64_t seed = 1;
  hdam::Method method = hdam::Method::Deconfounded;
  double rho = 0.5;
  bool center_columns = false;
  /// Place knots and factor the Gram matrix on training rows only.
  bool knots_per_fold = false;
  grouplasso::SolverOptions solver{1e-6, 10000, false};
  int jobs = 1;
};

void validate(const CvPlan& plan, Index n);

struct CvCell {
  int stage = 1;
  int K = 0;
  double lambda = 0.0;
  std::vector<double> fold_errors;
  double mean_err = 0.0;
  double se_err = 0.0;
  bool chosen = false;
  int nonconverged = 0;
};

struct CvReport {
  std::vector<CvCell> cells;
  int K_star = 0;
  double lambda_star = 0.0;
  double lambda_max_at_K_star = 0.0;
  std::optional<Index> q_hat;
};

struct CvResult {
  int K = 0;
  double lambda = 0.0;
  CvReport report;
};

/// Seeded permutation of 0..n-1 cut into `folds` contiguous blocks whose
/// sizes differ by at most one.
std::vector<std::vector<Index>> fold_partition(Index n, int folds, std::uint64_t seed);

/// Two-stage cross-validation on the transformed system: a (K, lambda) grid,
/// then a finer lambda grid at the selected K. The transform (or factor
/// estimate) and the bases come from the full X; only the rows of the
/// transformed system are split.
CvResult cv_select(const Matrix& X, const Vector& Y, const CvPlan& plan);

/// Columns: stage,K,lambda,mean_err,se_err,chosen
void write_report_csv(const CvReport& report, std::ostream& out);

}  // namespace specdeconf::modelselect
