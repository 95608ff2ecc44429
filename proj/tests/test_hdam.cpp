#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "specdeconf/hdam.hpp"
#include "specdeconf/io.hpp"
#include "specdeconf/simgen.hpp"

using namespace specdeconf;
using namespace specdeconf::hdam;

namespace {

struct Data {
  Matrix X;
  Vector Y;
};

Data additive_data(int n, int p, unsigned seed) {
  Data d;
  d.X = oracle::gaussian(n, p, seed);
  const Vector noise = oracle::gaussian(n, 1, seed + 1).col(0);
  d.Y.resize(n);
  for (int i = 0; i < n; ++i)
    d.Y[i] = 1.0 + std::sin(2 * d.X(i, 0)) + d.X(i, 1) * d.X(i, 1) - 1.0 + 0.3 * noise[i];
  return d;
}

FitOptions options(int K, double lambda) {
  FitOptions o;
  o.K = K;
  o.lambda = lambda;
  o.solver.tol = 1e-10;
  o.solver.max_iter = 100000;
  return o;
}

double lambda_max_for(const Data& d, Method m, int K) {
  const auto adj = make_adjustment(d.X, m);
  return grouplasso::lambda_max(prepare_design(d.X, d.Y, K, adj).problem);
}

Matrix raw_design(const FittedHdam& fit, const Matrix& X, Index j) {
  return basis::design_matrix(X.col(j), fit.components[static_cast<std::size_t>(j)].spec);
}

}  // namespace

TEST(Method, ParseAndPrint) {
  for (auto m : {Method::Deconfounded, Method::Naive, Method::EstimatedFactors})
    EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(parse_method("estimated-factors"), Method::EstimatedFactors);
  EXPECT_THROW(parse_method("lasso"), Error);
}

TEST(FitDeconfounded, AboveLambdaMaxIsConstant) {
  const auto d = additive_data(60, 8, 1);
  const double lmax = lambda_max_for(d, Method::Deconfounded, 6);
  const auto fit = fit_deconfounded(d.X, d.Y, options(6, 1.01 * lmax));
  EXPECT_TRUE(active_set(fit).empty());
  const auto Q = spectral::trim_transform(d.X, 0.5);
  const Vector q1 = Q.apply(Vector(Vector::Ones(60)));
  const double want = q1.dot(Q.apply(d.Y)) / q1.squaredNorm();
  EXPECT_NEAR(fit.beta0, want, 1e-10);
  const Vector yhat = predict(fit, d.X);
  EXPECT_LT((yhat.array() - want).abs().maxCoeff(), 1e-10);
}

TEST(FitDeconfounded, DeterministicSerialization) {
  const auto d = additive_data(60, 10, 2);
  const double lmax = lambda_max_for(d, Method::Deconfounded, 5);
  const auto a = fit_deconfounded(d.X, d.Y, options(5, 0.2 * lmax));
  const auto b = fit_deconfounded(d.X, d.Y, options(5, 0.2 * lmax));
  EXPECT_EQ(io::model_to_json(a), io::model_to_json(b));
}

TEST(FitDeconfounded, ModelInvariants) {
  const auto d = additive_data(120, 12, 3);
  const double lmax = lambda_max_for(d, Method::Deconfounded, 7);
  const auto fit = fit_deconfounded(d.X, d.Y, options(7, 0.1 * lmax));
  const auto active = active_set(fit);
  ASSERT_FALSE(active.empty());
  const double sqrt_n = std::sqrt(120.0);
  for (Index j = 0; j < fit.covariates(); ++j) {
    const auto& c = fit.components[static_cast<std::size_t>(j)];
    const Vector back = c.R.triangularView<Eigen::Upper>().solve(c.beta_tilde);
    EXPECT_LT((back - c.beta).norm(), 1e-8 * (1 + c.beta.norm()));
    const Vector f = raw_design(fit, d.X, j) * c.beta;
    EXPECT_NEAR(c.beta_tilde.norm(), f.norm() / sqrt_n, 1e-8 * (1 + c.strength));
    EXPECT_NEAR(c.strength, c.beta_tilde.norm(), 1e-14);
    const double rms = f.norm() / sqrt_n;
    EXPECT_LE(std::abs(f.mean()), 1e-8 * (1 + rms)) << "component " << j;
  }
}

TEST(FitDeconfounded, RecoversSignalComponents) {
  const auto d = additive_data(200, 15, 4);
  const double lmax = lambda_max_for(d, Method::Deconfounded, 7);
  const auto fit = fit_deconfounded(d.X, d.Y, options(7, 0.1 * lmax));
  const auto active = active_set(fit);
  EXPECT_NE(std::find(active.begin(), active.end(), 0), active.end());
  EXPECT_NE(std::find(active.begin(), active.end(), 1), active.end());
}

TEST(FitDeconfounded, DegenerateColumnCarriesIndex) {
  auto d = additive_data(40, 5, 5);
  d.X.col(3).setConstant(2.0);
  try {
    fit_deconfounded(d.X, d.Y, options(5, 0.1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateColumn);
    ASSERT_TRUE(e.index());
    EXPECT_EQ(*e.index(), 3);
  }
}

TEST(FitDeconfounded, NonConvergenceThrowsUnlessAllowed) {
  const auto d = additive_data(60, 8, 6);
  auto o = options(6, 1e-4);
  o.solver.tol = 1e-15;
  o.solver.max_iter = 3;
  try {
    fit_deconfounded(d.X, d.Y, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotConverged);
  }
  o.allow_nonconverged = true;
  const auto fit = fit_deconfounded(d.X, d.Y, o);
  EXPECT_FALSE(fit.solver.converged);
}

TEST(FitDeconfounded, InputValidation) {
  const auto d = additive_data(30, 4, 7);
  EXPECT_THROW(fit_deconfounded(d.X, d.Y, options(4, 0.1)), Error);
  EXPECT_THROW(fit_deconfounded(d.X, d.Y, options(5, -1.0)), Error);
  try {
    fit_deconfounded(d.X, Vector(d.Y.head(20)), options(5, 0.1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(FitNaive, EqualsDeconfoundedOnFlatSpectrum) {
  const int n = 60;
  Eigen::HouseholderQR<Matrix> qr(oracle::gaussian(n, 8, 8));
  const Matrix X = std::sqrt(double(n)) * Matrix(qr.householderQ() * Matrix::Identity(n, 8));
  const Vector Y = X.col(0).array().sin().matrix() + 0.2 * oracle::gaussian(n, 1, 9).col(0);
  const Data d{X, Y};
  const double lambda = 0.2 * lambda_max_for(d, Method::Naive, 5);
  const auto naive = fit_naive(X, Y, options(5, lambda));
  const auto dec = fit_deconfounded(X, Y, options(5, lambda));
  EXPECT_NEAR(naive.beta0, dec.beta0, 1e-8);
  for (std::size_t j = 0; j < naive.components.size(); ++j)
    EXPECT_LT((naive.components[j].beta - dec.components[j].beta).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitNaive, UnpenalizedSplineRegression) {
  const int n = 200;
  const Matrix X = oracle::gaussian(n, 1, 10);
  const Vector Y = (X.col(0).array() * 1.5).cos().matrix() + 0.1 * oracle::gaussian(n, 1, 11).col(0);
  const auto fit = fit_naive(X, Y, options(5, 0.0));
  // Oracle: textbook recursion on the same quantile knots, then normal equations.
  std::vector<double> xs(X.col(0).begin(), X.col(0).end());
  const double lo = *std::min_element(xs.begin(), xs.end());
  const double hi = *std::max_element(xs.begin(), xs.end());
  const double mid = oracle::quantile7(xs, 0.5);
  const std::vector<double> t{lo, lo, lo, lo, mid, hi, hi, hi, hi};
  Matrix B(n, 5);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 5; ++k) B(i, k) = oracle::cox_de_boor(t, k, 3, X(i, 0));
  const Vector coef = (B.transpose() * B).ldlt().solve(B.transpose() * Y);
  const Vector want = B * coef;
  EXPECT_LT((predict(fit, X) - want).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(FitEstimatedFactors, SpikedNoiseWithoutConfounding) {
  const int n = 80, p = 20;
  Matrix X = oracle::gaussian(n, p, 12);
  X += 6.0 * oracle::gaussian(n, 1, 13) * oracle::gaussian(1, p, 14);
  const Vector Y = X.col(0).array().tanh().matrix() + 0.3 * oracle::gaussian(n, 1, 15).col(0);
  const auto fit = fit_estimated_factors(X, Y, options(5, 0.05));
  ASSERT_TRUE(fit.q_hat);
  EXPECT_GE(*fit.q_hat, 1);
  ASSERT_TRUE(fit.gamma);
  EXPECT_EQ(fit.gamma->size(), *fit.q_hat);
  EXPECT_TRUE(predict(fit, X).allFinite());
}

TEST(FitEstimatedFactors, PredictionOmitsFactorTerm) {
  simgen::SimConfig cfg;
  cfg.n = 80;
  cfg.p = 30;
  cfg.q = 2;
  cfg.seed = 16;
  const auto draw = simgen::gen_dataset(cfg);
  const auto fit = fit_estimated_factors(draw.X, draw.Y, options(5, 0.05));
  Vector additive = Vector::Constant(80, fit.beta0);
  for (Index j = 0; j < fit.covariates(); ++j)
    for (Index i = 0; i < 80; ++i) additive[i] += predict_component(fit, j, draw.X(i, j));
  EXPECT_LT((predict(fit, draw.X) - additive).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PredictComponent, InactiveTrainingAndClamped) {
  const auto d = additive_data(100, 10, 17);
  const double lmax = lambda_max_for(d, Method::Deconfounded, 6);
  const auto fit = fit_deconfounded(d.X, d.Y, options(6, 0.3 * lmax));
  const auto active = active_set(fit);
  ASSERT_FALSE(active.empty());
  for (Index j = 0; j < fit.covariates(); ++j) {
    if (std::find(active.begin(), active.end(), j) != active.end()) continue;
    for (double x : {-3.0, 0.0, 2.5}) EXPECT_EQ(predict_component(fit, j, x), 0.0);
  }
  const Index j = active.front();
  const Vector f = raw_design(fit, d.X, j) * fit.components[static_cast<std::size_t>(j)].beta;
  for (Index i = 0; i < 100; ++i) EXPECT_NEAR(predict_component(fit, j, d.X(i, j)), f[i], 1e-10);
  const auto& spec = fit.components[static_cast<std::size_t>(j)].spec;
  EXPECT_EQ(predict_component(fit, j, spec.upper() + 10), predict_component(fit, j, spec.upper()));
  EXPECT_EQ(predict_component(fit, j, spec.lower() - 10), predict_component(fit, j, spec.lower()));
  EXPECT_THROW(predict_component(fit, fit.covariates(), 0.0), Error);
}

TEST(Predict, SingleRowAndShapeCheck) {
  const auto d = additive_data(80, 6, 18);
  const auto fit = fit_deconfounded(d.X, d.Y, options(5, 0.02));
  const Matrix row = d.X.row(5);
  double sum = fit.beta0;
  for (Index j = 0; j < 6; ++j) sum += predict_component(fit, j, row(0, j));
  const Vector y1 = predict(fit, row);
  ASSERT_EQ(y1.size(), 1);
  EXPECT_NEAR(y1[0], sum, 1e-12);
  try {
    predict(fit, Matrix(3, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Predict, InSampleMatchesTransformedFit) {
  // With Q = I the in-sample prediction is the fitted value of the solver.
  const auto d = additive_data(80, 6, 19);
  const auto adj = make_adjustment(d.X, Method::Naive);
  const auto design = prepare_design(d.X, d.Y, 6, adj);
  const auto o = options(6, 0.05);
  const auto sol = grouplasso::solve(design.problem, o.lambda, o.solver);
  const auto fit = assemble_fit(design, sol, Method::Naive, o);
  const Vector fitted = d.Y - grouplasso::residual(design.problem, sol.unpenalized, sol.beta);
  EXPECT_LT((predict(fit, d.X) - fitted).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Predict, CenteringIsStoredAndApplied) {
  auto d = additive_data(70, 5, 20);
  d.X.array() += 3.0;
  auto o = options(5, 0.05);
  o.center_columns = true;
  const auto fit = fit_deconfounded(d.X, d.Y, o);
  ASSERT_TRUE(fit.centering);
  EXPECT_LT((*fit.centering - column_means(d.X)).norm(), 1e-12);
  const Matrix Xc = center_columns(d.X, *fit.centering);
  EXPECT_LT(column_means(Xc).cwiseAbs().maxCoeff(), 1e-12);
  FitOptions plain = o;
  plain.center_columns = false;
  const auto fit_c = fit_deconfounded(Xc, d.Y, plain);
  EXPECT_LT((predict(fit, d.X) - predict(fit_c, Xc)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ActiveSet, InjectedSingleGroup) {
  const auto d = additive_data(50, 4, 21);
  const double lmax = lambda_max_for(d, Method::Naive, 5);
  auto fit = fit_naive(d.X, d.Y, options(5, 2 * lmax));
  EXPECT_TRUE(active_set(fit).empty());
  fit.components[2].beta_tilde = Vector::Ones(5);
  fit.components[2].strength = std::sqrt(5.0);
  EXPECT_EQ(active_set(fit), std::vector<Index>{2});
}
