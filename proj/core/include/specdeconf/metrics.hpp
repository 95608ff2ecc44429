#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "specdeconf/hdam.hpp"
#include "specdeconf/simgen.hpp"

namespace specdeconf::metrics {

inline constexpr Index kDefaultMonteCarloRows = 10000;

struct MseEstimate {
  double mse = 0.0;
  double standard_error = 0.0;
};

using Predictor = std::function<Vector(const Matrix&)>;

/// Monte-Carlo estimate of E[(fhat(X) - f0(X))^2] over fresh covariate rows
/// drawn from the truth's marginal. f0 carries no intercept.
MseEstimate mse_l2(const Predictor& predictor, const simgen::SimTruth& truth, Index n_mc,
                   std::uint64_t seed);
MseEstimate mse_l2(const hdam::FittedHdam& fit, const simgen::SimTruth& truth,
                   Index n_mc = kDefaultMonteCarloRows, std::uint64_t seed = 0);

/// True iff the estimated active set contains every index in truth_active
/// (0-based; the default is the four simulated components).
bool screening(const hdam::FittedHdam& fit, const std::vector<Index>& truth_active = {0, 1, 2, 3});

using Ranking = std::vector<std::pair<Index, double>>;

/// (j, ||beta~_j||) sorted by decreasing strength, ties toward smaller j.
Ranking strength_ranking(const hdam::FittedHdam& fit);

/// |A ∩ B| / |A ∪ B| for the top-l index sets of two rankings.
double jaccard_topl(const Ranking& a, const Ranking& b, std::size_t l);

}  // namespace specdeconf::metrics
