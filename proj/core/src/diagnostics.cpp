#include "specdeconf/diagnostics.hpp"

#include <cmath>

#include "specdeconf/spectral.hpp"

namespace specdeconf::diagnostics {
namespace {

bool is_diagonal(const Matrix& S) {
  for (Index j = 0; j < S.cols(); ++j)
    for (Index i = 0; i < S.rows(); ++i)
      if (i != j && S(i, j) != 0.0) return false;
  return true;
}

}  // namespace

double compatibility_lower_bound(const Matrix& Psi, const Matrix& sigma_e) {
  const Index p = sigma_e.rows();
  if (sigma_e.cols() != p || Psi.cols() != p)
    throw Error(ErrorCode::ShapeMismatch, "Psi must be q x p and Sigma_E p x p");
  if (!sigma_e.isApprox(sigma_e.transpose(), 1e-12))
    throw Error(ErrorCode::NotPositiveDefinite, "Sigma_E is not symmetric");
  Eigen::LLT<Matrix> llt(sigma_e);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "Sigma_E is not positive definite");

  Vector scale(p);
  for (Index j = 0; j < p; ++j) {
    const double v = Psi.col(j).squaredNorm() + sigma_e(j, j);
    scale[j] = 1.0 / std::sqrt(v);
    if (!std::isfinite(scale[j]))
      throw Error(ErrorCode::NotPositiveDefinite, "non-finite scaling for covariate " +
                                                      std::to_string(j + 1));
  }
  const Matrix A = scale.asDiagonal() * sigma_e * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

Vector best_linear_confounding(const Matrix& Psi, const Vector& psi, const Matrix& sigma_e) {
  const Index p = Psi.cols();
  const Index q = Psi.rows();
  if (psi.size() != q || sigma_e.rows() != p || sigma_e.cols() != p)
    throw Error(ErrorCode::ShapeMismatch, "inconsistent Psi, psi, Sigma_E shapes");
  if (q == 0) return Vector::Zero(p);
  if (is_diagonal(sigma_e)) {
    // Woodbury: Sigma^{-1} Psi^T (I_q + Psi Sigma^{-1} Psi^T)^{-1} psi.
    const Vector inv_diag = sigma_e.diagonal().cwiseInverse();
    if (!inv_diag.allFinite() || (sigma_e.diagonal().array() <= 0.0).any())
      throw Error(ErrorCode::SingularCovariance, "Sigma_E has a nonpositive diagonal");
    const Matrix scaled = Psi * inv_diag.asDiagonal();  // q x p
    Matrix core = Matrix::Identity(q, q) + scaled * Psi.transpose();
    Eigen::LLT<Matrix> llt(core);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::SingularCovariance, "Woodbury core not positive definite");
    return scaled.transpose() * llt.solve(psi);
  }
  Matrix M = Psi.transpose() * Psi + sigma_e;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::SingularCovariance, "Psi^T Psi + Sigma_E not positive definite");
  return llt.solve(Psi.transpose() * psi);
}

Leakage confounding_leakage(const Matrix& X, const Matrix& Psi, const Vector& psi,
                            const Matrix& sigma_e, double rho) {
  if (X.cols() != Psi.cols()) throw Error(ErrorCode::ShapeMismatch, "X and Psi disagree on p");
  const Vector b = best_linear_confounding(Psi, psi, sigma_e);
  const Vector Xb = X * b;
  const auto Q = spectral::trim_transform(X, rho);
  const double n = static_cast<double>(X.rows());
  return {Xb.squaredNorm() / n, Q.apply(Xb).squaredNorm() / n};
}

Vector singular_values(const Matrix& X) {
  if (X.size() == 0) return Vector(0);
  return Eigen::BDCSVD<Matrix>(X).singularValues();
}

}  // namespace specdeconf::diagnostics
