#include "specdeconf/simgen.hpp"

#include <cmath>
#include <string>

namespace specdeconf::simgen {
namespace {

constexpr std::string_view kCoefficientTag = "coefficients";
constexpr std::string_view kConfounderTag = "confounder";
constexpr std::string_view kCovariateNoiseTag = "covariate-noise";
constexpr std::string_view kResponseNoiseTag = "response-noise";

Matrix sample_confounders(Index rows, Index q, CounterRng& rng) {
  Matrix H(rows, q);
  for (Index i = 0; i < rows; ++i)
    for (Index l = 0; l < q; ++l) H(i, l) = rng.normal();
  return H;
}

Matrix confounded_covariates(const Matrix& H, const Matrix& Psi, const Matrix& E, double alpha) {
  Matrix X = H * Psi;
  if (alpha != 0.0) X = X.unaryExpr([alpha](double t) { return eta(alpha, t); });
  X += E;
  return X;
}

}  // namespace

std::string_view to_string(Influence influence) {
  return influence == Influence::Equal ? "equal" : "decreasing";
}

Influence parse_influence(std::string_view name) {
  if (name == "equal" || name == "equalCI") return Influence::Equal;
  if (name == "decreasing" || name == "decreasingCI") return Influence::Decreasing;
  throw Error(ErrorCode::InvalidConfig,
              "unknown influence '" + std::string(name) + "' (expected equal or decreasing)");
}

void validate(const SimConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (c.n < 1) fail("n must be positive");
  if (c.p < 1) fail("p must be positive");
  if (c.q < 0) fail("q must be nonnegative");
  if (c.q > std::min(c.n, c.p)) fail("q must not exceed min(n, p)");
  for (double v : {c.cs, c.prop, c.noise_sd, c.alpha, c.beta, c.sigma_e.rho})
    if (!std::isfinite(v)) fail("all real parameters must be finite");
  if (c.cs < 0.0) fail("cs must be nonnegative");
  if (c.prop < 0.0 || c.prop > 1.0) fail("prop must lie in [0, 1]");
  if (c.noise_sd < 0.0) fail("noise_sd must be nonnegative");
  if (c.alpha < 0.0 || c.alpha > 1.0) fail("alpha must lie in [0, 1]");
  if (c.beta < 0.0 || c.beta > 1.0) fail("beta must lie in [0, 1]");
  if (c.sigma_e.kind == ErrorCovariance::Kind::Toeplitz &&
      (c.sigma_e.rho < 0.0 || c.sigma_e.rho >= 1.0))
    fail("Toeplitz rho must lie in [0, 1)");
}

double f0_component(int j, double x) {
  switch (j) {
    case 1: return -std::sin(2.0 * x);
    case 2: return 2.0 - 2.0 * std::tanh(x + 0.5);
    case 3: return x;
    case 4: return 4.0 / (std::exp(x) + std::exp(-x));
    default: return 0.0;
  }
}

double f0(const Eigen::Ref<const Vector>& x) {
  double sum = 0.0;
  const int active = static_cast<int>(std::min<Index>(4, x.size()));
  for (int j = 1; j <= active; ++j) sum += f0_component(j, x[j - 1]);
  return sum;
}

double eta(double alpha, double t) { return (1.0 - alpha) * t + alpha * std::abs(t); }

std::pair<Matrix, Vector> gen_coefficients(const SimConfig& config) {
  validate(config);
  auto rng = make_stream(config.seed, kCoefficientTag, config.replicate);
  Matrix Psi(config.q, config.p);
  for (Index l = 0; l < config.q; ++l) {
    const double a = config.influence == Influence::Equal ? 1.0 : 1.0 / static_cast<double>(l + 1);
    for (Index j = 0; j < config.p; ++j) {
      const double value = rng.uniform(-a, a);
      const bool keep = rng.bernoulli(config.prop);
      Psi(l, j) = keep ? value : 0.0;
    }
  }
  Vector psi(config.q);
  for (Index l = 0; l < config.q; ++l) psi[l] = config.cs * rng.uniform();
  return {std::move(Psi), std::move(psi)};
}

Matrix error_covariance_matrix(const ErrorCovariance& cov, Index p) {
  if (cov.kind == ErrorCovariance::Kind::Identity) return Matrix::Identity(p, p);
  Matrix S(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      S(i, j) = std::pow(cov.rho, static_cast<double>(std::abs(i - j)));
  return S;
}

Matrix sample_error_matrix(const ErrorCovariance& cov, Index rows, Index p, CounterRng& rng) {
  Matrix E(rows, p);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < p; ++j) E(i, j) = rng.normal();
  if (cov.kind == ErrorCovariance::Kind::Toeplitz) {
    const double innov = std::sqrt(1.0 - cov.rho * cov.rho);
    for (Index j = 1; j < p; ++j) E.col(j) = cov.rho * E.col(j - 1) + innov * E.col(j);
  }
  return E;
}

Matrix sample_covariates(const SimTruth& truth, Index rows, CounterRng& rng) {
  const Matrix H = sample_confounders(rows, truth.config.q, rng);
  const Matrix E = sample_error_matrix(truth.config.sigma_e, rows, truth.config.p, rng);
  return confounded_covariates(H, truth.Psi, E, truth.config.alpha);
}

SimDraw gen_dataset(const SimConfig& config) {
  validate(config);
  SimDraw draw;
  auto [Psi, psi] = gen_coefficients(config);
  draw.truth = SimTruth{config, std::move(Psi), std::move(psi)};

  auto h_rng = make_stream(config.seed, kConfounderTag, config.replicate);
  auto E_rng = make_stream(config.seed, kCovariateNoiseTag, config.replicate);
  auto e_rng = make_stream(config.seed, kResponseNoiseTag, config.replicate);
  draw.H = sample_confounders(config.n, config.q, h_rng);
  draw.E = sample_error_matrix(config.sigma_e, config.n, config.p, E_rng);
  draw.X = confounded_covariates(draw.H, draw.truth.Psi, draw.E, config.alpha);

  draw.e.resize(config.n);
  for (Index i = 0; i < config.n; ++i) draw.e[i] = config.noise_sd * e_rng.normal();

  const Vector confounding = draw.H * draw.truth.psi;
  draw.Y.resize(config.n);
  for (Index i = 0; i < config.n; ++i)
    draw.Y[i] = f0(draw.X.row(i).transpose()) + eta(config.beta, confounding[i]) + draw.e[i];
  return draw;
}

}  // namespace specdeconf::simgen
