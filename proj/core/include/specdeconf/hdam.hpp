#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "specdeconf/basis.hpp"
#include "specdeconf/errors.hpp"
#include "specdeconf/grouplasso.hpp"

namespace specdeconf::hdam {

enum class Method { Deconfounded, Naive, EstimatedFactors };

std::string_view to_string(Method method);
/// Accepts "deconfounded", "naive", "estimated-factors".
Method parse_method(std::string_view name);

struct FitOptions {
  int K = 7;
  double lambda = 0.0;
  double rho = 0.5;
  bool center_columns = false;
  bool allow_nonconverged = false;
  grouplasso::SolverOptions solver{};
};

/// One fitted additive component f_j(x) = b_j(x)^T beta.
struct ComponentFit {
  basis::BasisSpec spec;
  Vector beta;        // raw B-spline coordinates
  /// Orthonormal-coordinate norm ||R beta||, i.e. the empirical function norm.
  double strength = 0.0;
  /// Training-time factor and orthonormal coordinates; empty after loading a
  /// serialized model.
  Matrix R;
  Vector beta_tilde;
  double ridge_used = 0.0;
};

struct SolverSummary {
  int iterations = 0;
  bool converged = true;
  double objective = 0.0;
  double kkt_residual = 0.0;
};

struct FittedHdam {
  Method method = Method::Deconfounded;
  int K = 0;
  double lambda = 0.0;
  double rho = 0.5;            // deconfounded only
  std::optional<Index> q_hat;  // estimated factors only
  double beta0 = 0.0;
  std::vector<ComponentFit> components;
  std::optional<Vector> gamma;      // estimated factors linear term
  std::optional<Vector> centering;  // column means subtracted before fitting
  SolverSummary solver;

  Index covariates() const { return static_cast<Index>(components.size()); }
};

FittedHdam fit(const Matrix& X, const Vector& Y, Method method, const FitOptions& opts);
FittedHdam fit_deconfounded(const Matrix& X, const Vector& Y, const FitOptions& opts);
FittedHdam fit_naive(const Matrix& X, const Vector& Y, const FitOptions& opts);
FittedHdam fit_estimated_factors(const Matrix& X, const Vector& Y, const FitOptions& opts);

/// Assembles the group problem shared by fitting and cross-validation. For the
/// estimated-factors method the transform is the identity and sqrt(n) times
/// the top q_hat left singular vectors enter as an unpenalized block.
struct PreparedDesign {
  basis::AdditiveBasis basis;
  grouplasso::GroupProblem problem;
  std::optional<Index> q_hat;
};

/// Transform or factor estimate computed once from X and reused across K.
struct ConfoundingAdjustment {
  Method method = Method::Deconfounded;
  spectral::SpectralTransform transform = spectral::SpectralTransform::identity(0);
  Matrix factors;  // estimated factors only
  std::optional<Index> q_hat;
};

ConfoundingAdjustment make_adjustment(const Matrix& X, Method method, double rho = 0.5);

PreparedDesign prepare_design(const Matrix& X, const Vector& Y, int K,
                              const ConfoundingAdjustment& adjustment,
                              std::span<const Index> knot_rows = {});

/// Maps a group solution back to a fitted model (raw coordinates, centering).
FittedHdam assemble_fit(const PreparedDesign& design, const grouplasso::GroupSolution& solution,
                        Method method, const FitOptions& opts);

Matrix center_columns(const Matrix& X, const Vector& means);
Vector column_means(const Matrix& X);

/// Component j (0-based) at x, with boundary clamping. Expects x on the same
/// (centered) scale the model was fitted on.
double predict_component(const FittedHdam& fit, Index j, double x);

/// beta0 + sum_j f_j(x_ij) for each row; applies the stored centering. The
/// estimated-factors linear term is not part of the prediction.
Vector predict(const FittedHdam& fit, const Matrix& X_new);

/// 0-based indices j with ||beta~_j|| > tol_rel * max_k ||beta~_k||.
std::vector<Index> active_set(const FittedHdam& fit, double tol_rel = 1e-8);

}  // namespace specdeconf::hdam
