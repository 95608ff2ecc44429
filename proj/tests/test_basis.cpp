#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "specdeconf/basis.hpp"

using namespace specdeconf;
using namespace specdeconf::basis;

namespace {

Vector iota(int n) {
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = i + 1;
  return x;
}

std::vector<double> interior(const BasisSpec& spec) {
  const auto& t = spec.knots();
  return {t.begin() + 4, t.end() - 4};
}

Vector uniform(int n, unsigned seed, double lo = -2.0, double hi = 3.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Vector x(n);
  for (auto& v : x) v = u(gen);
  return x;
}

}  // namespace

TEST(QuantileKnots, MedianForFiveFunctions) {
  const auto spec = quantile_knots(iota(100), 5);
  ASSERT_EQ(spec.size(), 5);
  const auto in = interior(spec);
  ASSERT_EQ(in.size(), 1u);
  EXPECT_DOUBLE_EQ(in[0], 50.5);
  EXPECT_DOUBLE_EQ(spec.lower(), 1.0);
  EXPECT_DOUBLE_EQ(spec.upper(), 100.0);
}

TEST(QuantileKnots, TercilesForSixFunctions) {
  const auto spec = quantile_knots(iota(100), 6);
  const auto in = interior(spec);
  ASSERT_EQ(in.size(), 2u);
  EXPECT_NEAR(in[0], 34.0, 1e-12);
  EXPECT_NEAR(in[1], 67.0, 1e-12);
}

TEST(QuantileKnots, AgreesWithSortingOracle) {
  const Vector x = uniform(137, 4);
  const std::vector<double> xs(x.begin(), x.end());
  for (int K : {5, 7, 9, 12, 15}) {
    const auto in = interior(quantile_knots(x, K));
    ASSERT_EQ(static_cast<int>(in.size()), K - 4);
    for (int i = 1; i <= K - 4; ++i)
      EXPECT_NEAR(in[i - 1], oracle::quantile7(xs, static_cast<double>(i) / (K - 3)), 1e-12);
  }
}

TEST(QuantileKnots, ConstantColumnIsDegenerate) {
  try {
    quantile_knots(Vector::Constant(20, 3.0), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateColumn);
  }
}

TEST(QuantileKnots, TooFewSamples) {
  try {
    quantile_knots(iota(4), 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewSamples);
  }
}

TEST(QuantileKnots, RejectsSmallK) {
  EXPECT_THROW(quantile_knots(iota(30), 4), Error);
}

TEST(QuantileKnots, TiedQuantilesAreSeparated) {
  // Mostly zeros: every interior quantile is 0.
  Vector x = Vector::Zero(50);
  x[49] = 1.0;
  x[48] = -1.0;
  const auto spec = quantile_knots(x, 9);
  const auto in = interior(spec);
  for (std::size_t i = 1; i < in.size(); ++i) EXPECT_GT(in[i], in[i - 1]);
  for (double t : in) {
    EXPECT_GT(t, spec.lower());
    EXPECT_LT(t, spec.upper());
  }
  const auto& t = spec.knots();
  EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
}

TEST(BasisSpec, RejectsMalformedKnots) {
  EXPECT_THROW(BasisSpec({0, 0, 0, 0, 1, 1, 1}), Error);
  EXPECT_THROW(BasisSpec({0, 0, 0, 0, 0.7, 0.5, 1, 1, 1, 1}), Error);
}

TEST(EvalBasis, LeftBoundaryIsFirstUnitVector) {
  const auto spec = quantile_knots(uniform(40, 1), 7);
  const Vector b = eval_basis(spec, spec.lower());
  EXPECT_DOUBLE_EQ(b[0], 1.0);
  EXPECT_DOUBLE_EQ(b.tail(6).cwiseAbs().sum(), 0.0);
  const Vector e = eval_basis(spec, spec.upper());
  EXPECT_NEAR(e[6], 1.0, 1e-15);
  EXPECT_NEAR(e.head(6).cwiseAbs().sum(), 0.0, 1e-15);
}

TEST(EvalBasis, FrozenValuesOnUniformKnots) {
  const BasisSpec spec({0, 0, 0, 0, 0.5, 1, 1, 1, 1});
  const std::vector<std::pair<double, std::array<double, 5>>> cases{
      {0.5, {0, 0.25, 0.5, 0.25, 0}},
      {0.3, {0.064, 0.558, 0.324, 0.054, 0}},
      {0.9, {0, 0.002, 0.052, 0.434, 0.512}},
  };
  for (const auto& [x, want] : cases) {
    const Vector got = eval_basis(spec, x);
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(got[k], want[k], 1e-14) << "x=" << x << " k=" << k;
  }
}

TEST(EvalBasis, MatchesCoxDeBoorRecursion) {
  const auto spec = quantile_knots(uniform(80, 9), 9);
  const Vector pts = uniform(200, 10, spec.lower(), spec.upper());
  for (double x : pts) {
    const Vector got = eval_basis(spec, x);
    for (int k = 0; k < spec.size(); ++k)
      EXPECT_NEAR(got[k], oracle::cox_de_boor(spec.knots(), k, 3, x), 1e-12);
  }
}

TEST(EvalBasis, ClampsOutsideRange) {
  const auto spec = quantile_knots(uniform(40, 2), 6);
  EXPECT_EQ(eval_basis(spec, spec.lower() - 5.0), eval_basis(spec, spec.lower()));
  EXPECT_EQ(eval_basis(spec, spec.upper() + 5.0), eval_basis(spec, spec.upper()));
}

TEST(EvalBasis, PartitionOfUnityNonnegativityLocality) {
  for (unsigned s = 0; s < 20; ++s) {
    const int K = 5 + static_cast<int>(s % 11);
    const auto spec = quantile_knots(uniform(60, 300 + s), K);
    const Vector pts = uniform(1000, 700 + s, spec.lower(), spec.upper());
    for (double x : pts) {
      const Vector b = eval_basis(spec, x);
      EXPECT_LT(std::abs(b.sum() - 1.0), 1e-12);
      EXPECT_GE(b.minCoeff(), 0.0);
      EXPECT_LE((b.array() != 0.0).count(), 4);
    }
  }
}

TEST(EvalBasis, EvalIntoReportsFirstNonzero) {
  const auto spec = quantile_knots(uniform(50, 3), 8);
  std::vector<double> out(8);
  for (double x : uniform(100, 4, spec.lower(), spec.upper())) {
    const int first = spec.eval_into(x, out);
    for (int k = 0; k < 8; ++k)
      if (k < first || k > first + 3) EXPECT_EQ(out[k], 0.0);
  }
}

TEST(DesignMatrix, SingleRowAndBoundaryRows) {
  const auto spec = quantile_knots(uniform(30, 5), 6);
  Vector one(1);
  one << 0.1;
  EXPECT_EQ(Vector(design_matrix(one, spec).row(0).transpose()), eval_basis(spec, 0.1));
  const Matrix B = design_matrix(Vector::Constant(7, spec.lower()), spec);
  for (Index i = 0; i < 7; ++i) {
    EXPECT_DOUBLE_EQ(B(i, 0), 1.0);
    EXPECT_DOUBLE_EQ(B.row(i).tail(5).cwiseAbs().sum(), 0.0);
  }
}

TEST(DesignMatrix, RowSumsAreOne) {
  const Vector x = uniform(200, 6);
  const Matrix B = design_matrix(x, quantile_knots(x, 6));
  EXPECT_LT((B.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(DesignMatrix, AffineEquivariance) {
  const Vector x = uniform(90, 7);
  const Vector y = (3.5 * x).array() + 11.0;
  const Matrix Bx = design_matrix(x, quantile_knots(x, 9));
  const Matrix By = design_matrix(y, quantile_knots(y, 9));
  EXPECT_LT((Bx - By).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Orthonormalize, OrthogonalColumnsGiveIdentity) {
  const int n = 8;
  Matrix B = Matrix::Zero(n, 4);
  // Hadamard-style columns, squared norm n.
  for (int i = 0; i < n; ++i) {
    B(i, 0) = 1;
    B(i, 1) = (i % 2) ? -1 : 1;
    B(i, 2) = ((i / 2) % 2) ? -1 : 1;
    B(i, 3) = ((i / 4) % 2) ? -1 : 1;
  }
  const auto ob = orthonormalize(B);
  EXPECT_EQ(ob.ridge_used, 0.0);
  EXPECT_LT((ob.R - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((ob.B_tilde - B).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Orthonormalize, SplineDesignBecomesOrthonormal) {
  const Vector x = uniform(150, 8);
  const Matrix B = design_matrix(x, quantile_knots(x, 9));
  const auto ob = orthonormalize(B);
  const double n = 150.0;
  ASSERT_EQ(ob.ridge_used, 0.0);
  EXPECT_LT((ob.B_tilde.transpose() * ob.B_tilde / n - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-8);
  const Matrix gram = B.transpose() * B / n;
  EXPECT_LT((ob.R.transpose() * ob.R - gram).norm(), 1e-8 * gram.norm());
  EXPECT_TRUE(ob.R.isUpperTriangular(0.0));
  EXPECT_GT(ob.R.diagonal().minCoeff(), 0.0);
}

TEST(Orthonormalize, CoefficientRoundTrip) {
  const Vector x = uniform(120, 11);
  const Matrix B = design_matrix(x, quantile_knots(x, 7));
  const auto ob = orthonormalize(B);
  for (unsigned s = 0; s < 5; ++s) {
    const Vector beta = oracle::gaussian(7, 1, 40 + s).col(0);
    const Vector lhs = B * beta;
    EXPECT_LT((lhs - ob.B_tilde * (ob.R * beta)).norm(), 1e-8 * lhs.norm());
  }
}

TEST(Orthonormalize, DuplicateColumnsTakeRidgePath) {
  const Vector x = uniform(60, 12);
  Matrix B5 = design_matrix(x, quantile_knots(x, 5));
  Matrix B(60, 6);
  B << B5, B5.col(2);
  const auto ob = orthonormalize(B);
  EXPECT_GT(ob.ridge_used, 0.0);
  const Matrix gram = B.transpose() * B / 60.0;
  const Matrix ridged = gram + ob.ridge_used * Matrix::Identity(6, 6);
  EXPECT_LT((ob.R.transpose() * ob.R - ridged).norm(), 1e-8 * ridged.norm());
  // Against the eigendecomposition: the ridge lifts the zero eigenvalue to
  // exactly ridge_used, so (1/n) B~^T B~ = R^-T gram R^-1 has the matching
  // eigenvalues e / (e + ridge).
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector want = (eig.eigenvalues().array() / (eig.eigenvalues().array() + ob.ridge_used)).matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> got(ob.B_tilde.transpose() * ob.B_tilde / 60.0);
  // The null direction's ratio amplifies eigensolver roundoff by 1/ridge, so
  // it only gets a loose check.
  EXPECT_LT((got.eigenvalues() - want).tail(5).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(got.eigenvalues()[0], 1e-4);
  const double trace = gram.trace();
  EXPECT_GE(ob.ridge_used, 1e-10 * trace / 6 * (1 - 1e-12));
}

TEST(Orthonormalize, ZeroMatrixIsSingular) {
  try {
    orthonormalize(Matrix::Zero(10, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularGram);
  }
}

TEST(AdditiveBasis, BuildsEveryColumnAndTagsErrors) {
  Matrix X = oracle::gaussian(40, 4, 13);
  const auto ab = build_additive_basis(X, 6);
  EXPECT_EQ(ab.covariates(), 4);
  EXPECT_EQ(ab.K, 6);
  for (const auto& ob : ab.ortho) {
    EXPECT_EQ(ob.B_tilde.rows(), 40);
    EXPECT_LT((ob.B_tilde.transpose() * ob.B_tilde / 40.0 - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-8);
  }
  X.col(2).setConstant(1.5);
  try {
    build_additive_basis(X, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateColumn);
    ASSERT_TRUE(e.index().has_value());
    EXPECT_EQ(*e.index(), 2);
  }
}

TEST(AdditiveBasis, KnotRowsRestrictPlacement) {
  const Matrix X = oracle::gaussian(50, 2, 14);
  std::vector<Index> rows(30);
  std::iota(rows.begin(), rows.end(), Index{0});
  const auto ab = build_additive_basis(X, 5, rows);
  const Vector sub = X.col(0).head(30);
  EXPECT_EQ(ab.specs[0].knots(), quantile_knots(sub, 5).knots());
  EXPECT_EQ(ab.ortho[0].B_tilde.rows(), 50);
}
