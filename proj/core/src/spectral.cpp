#include "specdeconf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace specdeconf::spectral {
namespace {

void require_finite(const Matrix& X) {
  if (!X.allFinite()) throw Error(ErrorCode::NonFinite, "design contains non-finite entries");
}

}  // namespace

SvdResult thin_svd(const Matrix& X, bool with_v) {
  require_finite(X);
  unsigned options = Eigen::ComputeThinU;
  if (with_v) options |= Eigen::ComputeThinV;
  Eigen::BDCSVD<Matrix> svd(X, options);
  SvdResult out;
  out.U = svd.matrixU();
  out.d = svd.singularValues();
  if (with_v) out.V = svd.matrixV();
  return out;
}

SpectralTransform SpectralTransform::identity(Index n) {
  return SpectralTransform(TransformKind::Identity, 0.0, Matrix(n, 0), Vector(0));
}

SpectralTransform::SpectralTransform(TransformKind kind, double parameter, Matrix U,
                                     Vector shrink)
    : kind_(kind), parameter_(parameter), n_(U.rows()), U_(std::move(U)),
      shrink_(std::move(shrink)) {
  if (U_.cols() != shrink_.size())
    throw Error(ErrorCode::ShapeMismatch, "basis and shrink sizes differ");
  std::vector<Index> active;
  for (Index l = 0; l < shrink_.size(); ++l)
    if (shrink_[l] < 1.0) active.push_back(l);
  active_U_.resize(n_, static_cast<Index>(active.size()));
  active_loss_.resize(static_cast<Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) {
    const auto idx = static_cast<Index>(k);
    active_U_.col(idx) = U_.col(active[k]);
    active_loss_[idx] = 1.0 - shrink_[active[k]];
  }
}

Matrix SpectralTransform::apply(const Matrix& M) const {
  if (M.rows() != n_)
    throw Error(ErrorCode::ShapeMismatch, "row count " + std::to_string(M.rows()) +
                                              " does not match transform size " +
                                              std::to_string(n_));
  if (active_U_.cols() == 0) return M;
  Matrix coeff = active_U_.transpose() * M;
  coeff = active_loss_.asDiagonal() * coeff;
  Matrix out = M;
  out.noalias() -= active_U_ * coeff;
  return out;
}

Vector SpectralTransform::apply(const Vector& v) const {
  if (v.size() != n_)
    throw Error(ErrorCode::ShapeMismatch, "vector length does not match transform size");
  if (active_U_.cols() == 0) return v;
  const Vector coeff = active_loss_.cwiseProduct(active_U_.transpose() * v);
  Vector out = v;
  out.noalias() -= active_U_ * coeff;
  return out;
}

Matrix SpectralTransform::dense() const {
  Matrix Q = Matrix::Identity(n_, n_);
  Q.noalias() -= active_U_ * active_loss_.asDiagonal() * active_U_.transpose();
  return Q;
}

SpectralTransform trim_transform(const Matrix& X, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidRho, "rho must lie in (0, 1)");
  return trim_transform(thin_svd(X), rho);
}

SpectralTransform trim_transform(const SvdResult& svd, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidRho, "rho must lie in (0, 1)");
  const Vector& d = svd.d;
  const Index r = d.size();
  if (r == 0 || !(d[0] > 0.0))
    throw Error(ErrorCode::ZeroMatrix, "design has no nonzero singular value");
  const double zero = kRelativeZero * d[0];
  if (d[0] < zero || d[0] < std::numeric_limits<double>::min())
    throw Error(ErrorCode::ZeroMatrix, "design has no nonzero singular value");
  const auto k = static_cast<Index>(std::floor(rho * static_cast<double>(r)));
  if (k < 1) throw Error(ErrorCode::InvalidRho, "floor(rho * r) must be at least 1");
  const double threshold = d[k - 1];
  Vector shrink(r);
  for (Index l = 0; l < r; ++l)
    shrink[l] = d[l] <= zero ? 1.0 : std::min(threshold / d[l], 1.0);
  return SpectralTransform(TransformKind::Trim, rho, svd.U, std::move(shrink));
}

SpectralTransform pca_transform(const Matrix& X, Index q) {
  return pca_transform(thin_svd(X), q);
}

SpectralTransform pca_transform(const SvdResult& svd, Index q) {
  const Index r = svd.d.size();
  if (q < 0 || q >= r)
    throw Error(ErrorCode::InvalidQ, "q must satisfy 0 <= q < r = " + std::to_string(r));
  Vector shrink = Vector::Ones(r);
  shrink.head(q).setZero();
  return SpectralTransform(TransformKind::Pca, static_cast<double>(q), svd.U,
                           std::move(shrink));
}

Index eigenvalue_ratio_q(const Matrix& X) {
  const Vector d = thin_svd(X).d;
  return eigenvalue_ratio_q(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())));
}

Index eigenvalue_ratio_q(std::span<const double> d) {
  const auto r = static_cast<Index>(d.size());
  if (r < 2) throw Error(ErrorCode::RankDeficient, "eigenvalue ratio needs r >= 2");
  if (!(d[0] > 0.0)) throw Error(ErrorCode::ZeroMatrix, "design has no nonzero singular value");
  const double zero = kRelativeZero * d[0];
  const Index upper = (r + 1) / 2;  // ceil(r / 2)
  Index best = 1;
  double best_ratio = -1.0;
  for (Index l = 1; l <= upper; ++l) {
    const double num = d[static_cast<std::size_t>(l - 1)];
    const double den = d[static_cast<std::size_t>(l)];
    if (den <= zero) {
      // Infinite ratio, unless d_l itself is zero (then every later ratio is
      // 0/0 and the best finite candidate already stands).
      if (num > zero) return l;
      break;
    }
    const double ratio = (num * num) / (den * den);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = l;
    }
  }
  return best;
}

}  // namespace specdeconf::spectral
