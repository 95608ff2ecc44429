#include "specdeconf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace specdeconf::metrics {

MseEstimate mse_l2(const Predictor& predictor, const simgen::SimTruth& truth, Index n_mc,
                   std::uint64_t seed) {
  if (n_mc < 1) throw Error(ErrorCode::InvalidConfig, "n_mc must be at least 1");
  auto rng = make_stream(seed, "monte-carlo", truth.config.replicate);
  const Matrix X = simgen::sample_covariates(truth, n_mc, rng);
  const Vector yhat = predictor(X);
  if (yhat.size() != n_mc) throw Error(ErrorCode::ShapeMismatch, "predictor returned wrong length");
  Vector sq(n_mc);
  for (Index i = 0; i < n_mc; ++i) {
    const double diff = yhat[i] - simgen::f0(X.row(i).transpose());
    sq[i] = diff * diff;
  }
  MseEstimate out;
  out.mse = sq.mean();
  if (n_mc > 1) {
    const double var = (sq.array() - out.mse).square().sum() / static_cast<double>(n_mc - 1);
    out.standard_error = std::sqrt(var / static_cast<double>(n_mc));
  }
  return out;
}

MseEstimate mse_l2(const hdam::FittedHdam& fit, const simgen::SimTruth& truth, Index n_mc,
                   std::uint64_t seed) {
  if (fit.covariates() != truth.config.p)
    throw Error(ErrorCode::ShapeMismatch, "fit and truth disagree on p");
  return mse_l2([&fit](const Matrix& X) { return hdam::predict(fit, X); }, truth, n_mc, seed);
}

bool screening(const hdam::FittedHdam& fit, const std::vector<Index>& truth_active) {
  const auto active = hdam::active_set(fit);
  return std::all_of(truth_active.begin(), truth_active.end(), [&](Index j) {
    return std::binary_search(active.begin(), active.end(), j);
  });
}

Ranking strength_ranking(const hdam::FittedHdam& fit) {
  Ranking out;
  out.reserve(fit.components.size());
  for (Index j = 0; j < fit.covariates(); ++j)
    out.emplace_back(j, fit.components[static_cast<std::size_t>(j)].strength);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

double jaccard_topl(const Ranking& a, const Ranking& b, std::size_t l) {
  std::set<Index> top_a;
  std::set<Index> top_b;
  for (std::size_t i = 0; i < std::min(l, a.size()); ++i) top_a.insert(a[i].first);
  for (std::size_t i = 0; i < std::min(l, b.size()); ++i) top_b.insert(b[i].first);
  std::size_t common = 0;
  for (Index j : top_a) common += top_b.count(j);
  const std::size_t unite = top_a.size() + top_b.size() - common;
  return unite == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(unite);
}

}  // namespace specdeconf::metrics
