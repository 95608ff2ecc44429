#include "specdeconf/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace specdeconf::basis {

BasisSpec::BasisSpec(std::vector<double> knots) : knots_(std::move(knots)) {
  const int order = kDegree + 1;
  if (static_cast<int>(knots_.size()) < 2 * order + 1)
    throw Error(ErrorCode::InvalidConfig, "knot vector too short for a cubic basis");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    throw Error(ErrorCode::InvalidConfig, "knot vector must be nondecreasing");
  for (int i = 1; i < order; ++i) {
    if (knots_[static_cast<std::size_t>(i)] != knots_.front() ||
        knots_[knots_.size() - 1 - static_cast<std::size_t>(i)] != knots_.back())
      throw Error(ErrorCode::InvalidConfig, "boundary knots must be repeated degree + 1 times");
  }
  if (!(knots_.back() > knots_.front()))
    throw Error(ErrorCode::DegenerateColumn, "knot vector has zero range");
  for (std::size_t i = order; i + order < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1]) && i > static_cast<std::size_t>(order))
      throw Error(ErrorCode::InvalidConfig, "interior knots must be strictly increasing");
    if (!(knots_[i] > knots_.front() && knots_[i] < knots_.back()))
      throw Error(ErrorCode::InvalidConfig, "interior knots must lie strictly inside the boundary");
  }
}

int BasisSpec::eval_into(double x, std::span<double> out) const {
  const int K = size();
  std::fill(out.begin(), out.end(), 0.0);
  x = std::clamp(x, lower(), upper());

  // Span s with t[s] <= x < t[s+1], s in [degree, K-1]; x == upper uses K-1.
  int span = K - 1;
  if (x < upper()) {
    const auto it = std::upper_bound(knots_.begin() + kDegree, knots_.begin() + K, x);
    span = static_cast<int>(it - knots_.begin()) - 1;
  }

  double N[kDegree + 1];
  double left[kDegree + 1];
  double right[kDegree + 1];
  N[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = x - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[j] = knots_[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = N[r] / (right[r + 1] + left[j - r]);
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  const int first = span - kDegree;
  for (int k = 0; k <= kDegree; ++k) out[static_cast<std::size_t>(first + k)] = N[k];
  return first;
}

double quantile_type7(std::span<const double> sorted, double level) {
  const auto n = sorted.size();
  const double h = static_cast<double>(n - 1) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BasisSpec quantile_knots(std::span<const double> x, int K) {
  if (K < kMinBasisSize)
    throw Error(ErrorCode::InvalidConfig, "K must be at least " + std::to_string(kMinBasisSize));
  if (static_cast<int>(x.size()) < K)
    throw Error(ErrorCode::TooFewSamples, "need at least K samples to place knots");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  if (!std::isfinite(sorted.front()) || !std::isfinite(sorted.back()))
    throw Error(ErrorCode::NonFinite, "covariate contains non-finite values");
  const double lo = sorted.front();
  const double hi = sorted.back();
  const double range = hi - lo;
  if (range < 1e-12 * std::max(1.0, std::abs(hi)))
    throw Error(ErrorCode::DegenerateColumn, "covariate has (numerically) zero range");

  const int interior = K - 4;
  std::vector<double> inner(static_cast<std::size_t>(interior));
  for (int i = 1; i <= interior; ++i)
    inner[static_cast<std::size_t>(i - 1)] =
        quantile_type7(sorted, static_cast<double>(i) / static_cast<double>(K - 3));

  // Separate ties (and knots sitting on the boundary) deterministically.
  const double gap = 1e-9 * range;
  double prev = lo;
  for (auto& t : inner) {
    if (t < prev + gap) t = prev + gap;
    prev = t;
  }
  double next = hi;
  for (auto it = inner.rbegin(); it != inner.rend(); ++it) {
    if (*it > next - gap) *it = next - gap;
    next = *it;
  }

  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(K + 4));
  knots.insert(knots.end(), kDegree + 1, lo);
  knots.insert(knots.end(), inner.begin(), inner.end());
  knots.insert(knots.end(), kDegree + 1, hi);
  return BasisSpec(std::move(knots));
}

BasisSpec quantile_knots(const Vector& x, int K) {
  return quantile_knots(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), K);
}

Vector eval_basis(const BasisSpec& spec, double x) {
  Vector out(spec.size());
  spec.eval_into(x, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Matrix design_matrix(const Vector& x, const BasisSpec& spec) {
  const int K = spec.size();
  Matrix B = Matrix::Zero(x.size(), K);
  std::vector<double> row(static_cast<std::size_t>(K));
  for (Index i = 0; i < x.size(); ++i) {
    const int first = spec.eval_into(x[i], row);
    for (int k = first; k <= first + kDegree; ++k) B(i, k) = row[static_cast<std::size_t>(k)];
  }
  return B;
}

namespace {

// Cholesky with a pivot check; returns false when the factor is unusable.
bool try_cholesky(const Matrix& G, double min_pivot, Matrix& R) {
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success) return false;
  Matrix L = llt.matrixL();
  if (!L.allFinite()) return false;
  for (Index k = 0; k < L.rows(); ++k)
    if (!(L(k, k) * L(k, k) >= min_pivot)) return false;
  R = L.transpose();
  return true;
}

}  // namespace

OrthoBasis orthonormalize(const Matrix& B) {
  const Index n = B.rows();
  const Index K = B.cols();
  if (n < K) throw Error(ErrorCode::TooFewSamples, "orthonormalization needs n >= K");
  if (!B.allFinite()) throw Error(ErrorCode::NonFinite, "basis design is not finite");
  Matrix G = (B.transpose() * B) / static_cast<double>(n);
  const double scale = G.trace() / static_cast<double>(K);
  if (!(scale > 0.0)) throw Error(ErrorCode::SingularGram, "basis design is identically zero");
  const double pivot_floor = 1e-10 * scale;

  OrthoBasis out;
  bool ok = try_cholesky(G, pivot_floor, out.R);
  double ridge = 1e-10 * scale;
  for (int attempt = 0; !ok && attempt < 3; ++attempt, ridge *= 100.0) {
    Matrix Gr = G;
    Gr.diagonal().array() += ridge;
    // With a ridge in place the pivots are bounded below by the ridge itself.
    ok = try_cholesky(Gr, 0.5 * ridge, out.R);
    if (ok) out.ridge_used = ridge;
  }
  if (!ok) throw Error(ErrorCode::SingularGram, "Gram matrix not factorizable even with ridge");

  out.B_tilde = B;
  out.R.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(out.B_tilde);
  return out;
}

AdditiveBasis build_additive_basis(const Matrix& X, int K, std::span<const Index> knot_rows) {
  AdditiveBasis out;
  out.K = K;
  out.specs.reserve(static_cast<std::size_t>(X.cols()));
  out.ortho.reserve(static_cast<std::size_t>(X.cols()));
  std::vector<double> column;
  for (Index j = 0; j < X.cols(); ++j) {
    try {
      const Vector x = X.col(j);
      if (knot_rows.empty()) {
        out.specs.push_back(quantile_knots(x, K));
        out.ortho.push_back(orthonormalize(design_matrix(x, out.specs.back())));
      } else {
        column.clear();
        for (Index i : knot_rows) column.push_back(x[i]);
        out.specs.push_back(quantile_knots(column, K));
        const Matrix B = design_matrix(x, out.specs.back());
        Matrix B_sub(static_cast<Index>(knot_rows.size()), B.cols());
        for (std::size_t i = 0; i < knot_rows.size(); ++i)
          B_sub.row(static_cast<Index>(i)) = B.row(knot_rows[i]);
        OrthoBasis ob = orthonormalize(B_sub);
        ob.B_tilde = B;
        ob.R.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(ob.B_tilde);
        out.ortho.push_back(std::move(ob));
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateColumn || e.code() == ErrorCode::SingularGram ||
          e.code() == ErrorCode::NonFinite)
        throw Error(e.code(), "covariate " + std::to_string(j + 1) + ": " + e.what(), j);
      throw;
    }
  }
  return out;
}

}  // namespace specdeconf::basis
