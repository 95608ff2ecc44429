#include "specdeconf/hdam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace specdeconf::hdam {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Deconfounded: return "deconfounded";
    case Method::Naive: return "naive";
    case Method::EstimatedFactors: return "estimated-factors";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "deconfounded" || name == "trim") return Method::Deconfounded;
  if (name == "naive") return Method::Naive;
  if (name == "estimated-factors" || name == "estimated_factors") return Method::EstimatedFactors;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(name) +
                                            "' (expected deconfounded, naive, estimated-factors)");
}

Vector column_means(const Matrix& X) { return X.colwise().mean().transpose(); }

Matrix center_columns(const Matrix& X, const Vector& means) {
  if (means.size() != X.cols())
    throw Error(ErrorCode::ShapeMismatch, "centering vector length does not match columns");
  return X.rowwise() - means.transpose();
}

ConfoundingAdjustment make_adjustment(const Matrix& X, Method method, double rho) {
  ConfoundingAdjustment adj;
  adj.method = method;
  switch (method) {
    case Method::Naive:
      adj.transform = spectral::SpectralTransform::identity(X.rows());
      break;
    case Method::Deconfounded:
      adj.transform = spectral::trim_transform(X, rho);
      break;
    case Method::EstimatedFactors: {
      const auto svd = spectral::thin_svd(X);
      const Index q = spectral::eigenvalue_ratio_q(
          std::span<const double>(svd.d.data(), static_cast<std::size_t>(svd.d.size())));
      adj.transform = spectral::SpectralTransform::identity(X.rows());
      adj.factors = std::sqrt(static_cast<double>(X.rows())) * svd.U.leftCols(q);
      adj.q_hat = q;
      break;
    }
  }
  return adj;
}

PreparedDesign prepare_design(const Matrix& X, const Vector& Y, int K,
                              const ConfoundingAdjustment& adjustment,
                              std::span<const Index> knot_rows) {
  if (X.rows() != Y.size())
    throw Error(ErrorCode::ShapeMismatch, "X has " + std::to_string(X.rows()) +
                                              " rows but Y has " + std::to_string(Y.size()));
  if (X.rows() <= K)
    throw Error(ErrorCode::TooFewSamples, "need n > K (n = " + std::to_string(X.rows()) +
                                              ", K = " + std::to_string(K) + ")");
  PreparedDesign design;
  design.basis = basis::build_additive_basis(X, K, knot_rows);
  std::vector<Matrix> groups;
  groups.reserve(design.basis.ortho.size());
  for (const auto& ob : design.basis.ortho) groups.push_back(ob.B_tilde);
  design.problem = grouplasso::make_problem(adjustment.transform, Y, groups, adjustment.factors);
  design.q_hat = adjustment.q_hat;
  return design;
}

FittedHdam assemble_fit(const PreparedDesign& design, const grouplasso::GroupSolution& solution,
                        Method method, const FitOptions& opts) {
  FittedHdam fit;
  fit.method = method;
  fit.K = design.basis.K;
  fit.lambda = opts.lambda;
  fit.rho = opts.rho;
  fit.q_hat = design.q_hat;
  fit.beta0 = solution.beta0();
  if (solution.unpenalized.size() > 1) fit.gamma = solution.unpenalized.tail(solution.unpenalized.size() - 1);
  fit.solver = {solution.iterations, solution.converged, solution.objective, solution.kkt_residual};

  const Index p = design.basis.covariates();
  fit.components.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    const auto& ob = design.basis.ortho[static_cast<std::size_t>(j)];
    ComponentFit comp{design.basis.specs[static_cast<std::size_t>(j)], Vector(), 0.0, ob.R,
                      solution.beta[static_cast<std::size_t>(j)], ob.ridge_used};
    comp.beta = ob.R.triangularView<Eigen::Upper>().solve(comp.beta_tilde);
    if (comp.beta_tilde.squaredNorm() > 0.0 && ob.ridge_used == 0.0) {
      // With a partition of unity the constant lies in every span, so moving
      // the empirical mean into the intercept leaves the loss unchanged and
      // can only lower the penalty. The exact optimum is already centered.
      const double mean = (ob.B_tilde * comp.beta_tilde).mean();
      comp.beta.array() -= mean;
      fit.beta0 += mean;
      comp.beta_tilde = ob.R * comp.beta;
    }
    comp.strength = comp.beta_tilde.norm();
    fit.components.push_back(std::move(comp));
  }
  return fit;
}

FittedHdam fit(const Matrix& X_in, const Vector& Y, Method method, const FitOptions& opts) {
  if (opts.K < basis::kMinBasisSize)
    throw Error(ErrorCode::InvalidConfig, "K must be at least 5");
  if (!(opts.lambda >= 0.0)) throw Error(ErrorCode::InvalidConfig, "lambda must be >= 0");
  if (X_in.rows() != Y.size())
    throw Error(ErrorCode::ShapeMismatch, "X and Y row counts differ");
  std::optional<Vector> centering;
  Matrix X_centered;
  if (opts.center_columns) {
    centering = column_means(X_in);
    X_centered = center_columns(X_in, *centering);
  }
  const Matrix& X = opts.center_columns ? X_centered : X_in;

  const auto adjustment = make_adjustment(X, method, opts.rho);
  const auto design = prepare_design(X, Y, opts.K, adjustment);
  const auto solution = grouplasso::solve(design.problem, opts.lambda, opts.solver);
  if (!solution.converged && !opts.allow_nonconverged)
    throw Error(ErrorCode::NotConverged,
                "group lasso did not converge in " + std::to_string(solution.iterations) +
                    " sweeps (kkt residual " + std::to_string(solution.kkt_residual) + ")");
  FittedHdam out = assemble_fit(design, solution, method, opts);
  out.centering = std::move(centering);
  return out;
}

FittedHdam fit_deconfounded(const Matrix& X, const Vector& Y, const FitOptions& opts) {
  return fit(X, Y, Method::Deconfounded, opts);
}

FittedHdam fit_naive(const Matrix& X, const Vector& Y, const FitOptions& opts) {
  return fit(X, Y, Method::Naive, opts);
}

FittedHdam fit_estimated_factors(const Matrix& X, const Vector& Y, const FitOptions& opts) {
  return fit(X, Y, Method::EstimatedFactors, opts);
}

double predict_component(const FittedHdam& fit, Index j, double x) {
  if (j < 0 || j >= fit.covariates())
    throw Error(ErrorCode::ShapeMismatch, "component index out of range");
  const auto& comp = fit.components[static_cast<std::size_t>(j)];
  if (comp.beta.squaredNorm() == 0.0) return 0.0;
  double values[64];
  std::vector<double> heap;
  std::span<double> out;
  const auto K = static_cast<std::size_t>(comp.spec.size());
  if (K <= 64) {
    out = std::span<double>(values, K);
  } else {
    heap.resize(K);
    out = heap;
  }
  const int first = comp.spec.eval_into(x, out);
  double sum = 0.0;
  for (int k = first; k <= first + basis::kDegree; ++k)
    sum += out[static_cast<std::size_t>(k)] * comp.beta[k];
  return sum;
}

Vector predict(const FittedHdam& fit, const Matrix& X_new) {
  if (X_new.cols() != fit.covariates())
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(fit.covariates()) +
                                              " columns, got " + std::to_string(X_new.cols()));
  const Matrix X = fit.centering ? center_columns(X_new, *fit.centering) : X_new;
  Vector yhat = Vector::Constant(X.rows(), fit.beta0);
  for (Index j = 0; j < fit.covariates(); ++j) {
    if (fit.components[static_cast<std::size_t>(j)].beta.squaredNorm() == 0.0) continue;
    for (Index i = 0; i < X.rows(); ++i) yhat[i] += predict_component(fit, j, X(i, j));
  }
  return yhat;
}

std::vector<Index> active_set(const FittedHdam& fit, double tol_rel) {
  double largest = 0.0;
  for (const auto& c : fit.components) largest = std::max(largest, c.strength);
  std::vector<Index> out;
  if (!(largest > 0.0)) return out;
  for (Index j = 0; j < fit.covariates(); ++j)
    if (fit.components[static_cast<std::size_t>(j)].strength > tol_rel * largest) out.push_back(j);
  return out;
}

}  // namespace specdeconf::hdam
