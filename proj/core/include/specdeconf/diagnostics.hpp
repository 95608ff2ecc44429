#pragma once

#include "specdeconf/errors.hpp"

namespace specdeconf::diagnostics {

/// lambda_min(Lambda Sigma_E Lambda) with
/// Lambda = diag((||Psi_j||^2 + Sigma_jj)^{-1/2}); a lower bound for the
/// population compatibility constant of the additive model.
double compatibility_lower_bound(const Matrix& Psi, const Matrix& sigma_e);

struct Leakage {
  double before = 0.0;  // ||X b||^2 / n
  double after = 0.0;   // ||Q_trim X b||^2 / n
};

/// b = (Psi^T Psi + Sigma_E)^{-1} Psi^T psi, the best linear proxy of the
/// confounding term H^T psi by X.
Vector best_linear_confounding(const Matrix& Psi, const Vector& psi, const Matrix& sigma_e);

Leakage confounding_leakage(const Matrix& X, const Matrix& Psi, const Vector& psi,
                            const Matrix& sigma_e, double rho = 0.5);

Vector singular_values(const Matrix& X);

}  // namespace specdeconf::diagnostics
