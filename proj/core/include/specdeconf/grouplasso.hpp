#pragma once

#include <span>
#include <vector>

#include "specdeconf/errors.hpp"
#include "specdeconf/spectral.hpp"

namespace specdeconf::grouplasso {

/// The transformed least-squares system
///
///   (1/n) || y - U c - sum_j Z_j beta_j ||^2 + lambda * sum_j ||beta_j||_2
///
/// where y = Q Y, U = [Q 1 | Q W] holds the unpenalized columns (intercept
/// first, then any extra unpenalized block W) and Z_j = Q B~_j.
struct GroupProblem {
  Vector response;
  Matrix unpenalized;
  std::vector<Matrix> groups;
  /// Largest eigenvalue of Z_j^T Z_j / n per group (block majorizer).
  Vector block_lipschitz;

  Index n() const { return response.size(); }
  Index group_count() const { return static_cast<Index>(groups.size()); }
};

GroupProblem make_problem(const spectral::SpectralTransform& Q, const Vector& Y,
                          const std::vector<Matrix>& groups, const Matrix& extra = Matrix());

/// Same system restricted to the given rows (n becomes rows.size()).
GroupProblem row_subset(const GroupProblem& problem, std::span<const Index> rows);

struct SolverOptions {
  double tol = 1e-7;
  int max_iter = 10000;
  /// Store the objective after every sweep in GroupSolution::objective_trace.
  bool record_objective = false;
};

struct GroupSolution {
  Vector unpenalized;  // intercept first
  std::vector<Vector> beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;

  double beta0() const { return unpenalized[0]; }
};

/// Smallest lambda at which every group is zero.
double lambda_max(const GroupProblem& problem);

double objective(const GroupProblem& problem, double lambda, const Vector& unpenalized,
                 const std::vector<Vector>& beta);

/// Residual y - U c - sum_j Z_j beta_j.
Vector residual(const GroupProblem& problem, const Vector& unpenalized,
                const std::vector<Vector>& beta);

/// Rounds of one cyclic block-prox sweep over all groups followed by
/// restarted FISTA on the active groups. converged means the KKT residual is
/// at most opts.tol. Never throws on non-convergence; the returned solution
/// carries converged = false instead.
GroupSolution solve(const GroupProblem& problem, double lambda, const SolverOptions& opts = {},
                    const GroupSolution* warm_start = nullptr);

/// Largest KKT violation across the unpenalized, active and inactive blocks,
/// divided by max(lambda, 1e-3 * lambda_max, 1e-12).
double kkt_residual(const GroupProblem& problem, double lambda, const GroupSolution& solution);

}  // namespace specdeconf::grouplasso
