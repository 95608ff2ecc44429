#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

#include "specdeconf/errors.hpp"
#include "specdeconf/rng.hpp"

namespace specdeconf::simgen {

enum class Influence { Equal, Decreasing };

std::string_view to_string(Influence influence);
Influence parse_influence(std::string_view name);

/// Covariance of the unconfounded covariate noise E.
struct ErrorCovariance {
  enum class Kind { Identity, Toeplitz };
  Kind kind = Kind::Identity;
  double rho = 0.0;  // Toeplitz entries rho^|i-j|

  static ErrorCovariance identity() { return {}; }
  static ErrorCovariance toeplitz(double rho) { return {Kind::Toeplitz, rho}; }
};

struct SimConfig {
  Index n = 100;
  Index p = 300;
  Index q = 5;
  Influence influence = Influence::Equal;
  double cs = 2.0;     // psi ~ Unif[0, cs]
  double prop = 1.0;   // Bernoulli mask on Psi
  ErrorCovariance sigma_e{};
  double noise_sd = 0.5;
  double alpha = 0.0;  // nonlinearity of the confounding on X
  double beta = 0.0;   // nonlinearity of the confounding on Y
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
};

/// Throws InvalidConfig when an invariant of SimConfig is violated.
void validate(const SimConfig& config);

/// Ground truth needed to regenerate covariates and evaluate f0.
struct SimTruth {
  SimConfig config;
  Matrix Psi;  // q x p
  Vector psi;  // q
};

struct SimDraw {
  Matrix X;
  Vector Y;
  Matrix H;
  Matrix E;
  Vector e;
  SimTruth truth;
};

/// The four active component functions (j is 1-based); 0 for j > 4.
double f0_component(int j, double x);
/// sum_{j=1..4} f0_j(x_j) for one covariate row.
double f0(const Eigen::Ref<const Vector>& x);

/// (1 - alpha) t + alpha |t|.
double eta(double alpha, double t);

std::pair<Matrix, Vector> gen_coefficients(const SimConfig& config);

SimDraw gen_dataset(const SimConfig& config);

/// Fresh covariate rows X = eta_alpha(H Psi) + E from the stored truth, drawn
/// from the given stream.
Matrix sample_covariates(const SimTruth& truth, Index rows, CounterRng& rng);

/// m x p matrix of N(0, Sigma_E) rows; Toeplitz uses the AR(1) recursion,
/// which is exactly the lower Cholesky factor of Toeplitz(rho) applied to
/// i.i.d. normals.
Matrix sample_error_matrix(const ErrorCovariance& cov, Index rows, Index p, CounterRng& rng);

/// Dense Sigma_E (p x p).
Matrix error_covariance_matrix(const ErrorCovariance& cov, Index p);

}  // namespace specdeconf::simgen
