#include "specdeconf/modelselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "specdeconf/io.hpp"
#include "specdeconf/parallel.hpp"
#include "specdeconf/rng.hpp"

namespace specdeconf::modelselect {
namespace {

using grouplasso::GroupProblem;
using grouplasso::GroupSolution;

struct PathResult {
  std::vector<double> errors;  // per lambda
  int nonconverged = 0;
};

double test_error(const GroupProblem& test, const GroupSolution& sol) {
  const Vector r = grouplasso::residual(test, sol.unpenalized, sol.beta);
  return r.squaredNorm() / static_cast<double>(test.n());
}

// Solves along a descending lambda path on the training rows with warm starts
// and scores each solution on the test rows. Entries flagged in `skip` keep a
// NaN error and do not break the warm-start chain.
PathResult run_path(const GroupProblem& train, const GroupProblem& test,
                    const std::vector<double>& lambdas, const std::vector<bool>& skip,
                    const grouplasso::SolverOptions& opts) {
  PathResult out;
  out.errors.assign(lambdas.size(), std::numeric_limits<double>::quiet_NaN());
  GroupSolution previous;
  bool have_previous = false;
  for (std::size_t m = 0; m < lambdas.size(); ++m) {
    if (!skip.empty() && skip[m]) continue;
    GroupSolution sol =
        grouplasso::solve(train, lambdas[m], opts, have_previous ? &previous : nullptr);
    if (!sol.converged) ++out.nonconverged;
    out.errors[m] = test_error(test, sol);
    previous = std::move(sol);
    have_previous = true;
  }
  return out;
}

void summarize(CvCell& cell) {
  const auto f = static_cast<double>(cell.fold_errors.size());
  double sum = 0.0;
  for (double e : cell.fold_errors) sum += e;
  cell.mean_err = sum / f;
  double ss = 0.0;
  for (double e : cell.fold_errors) ss += (e - cell.mean_err) * (e - cell.mean_err);
  cell.se_err = cell.fold_errors.size() > 1 ? std::sqrt(ss / (f - 1.0) / f) : 0.0;
}

// Minimum mean error; ties go to the larger lambda, then the smaller K.
bool better(const CvCell& a, const CvCell& b) {
  if (a.mean_err != b.mean_err) return a.mean_err < b.mean_err;
  if (a.lambda != b.lambda) return a.lambda > b.lambda;
  return a.K < b.K;
}

std::vector<Index> complement(const std::vector<Index>& test, Index n) {
  std::vector<bool> in_test(static_cast<std::size_t>(n), false);
  for (Index i : test) in_test[static_cast<std::size_t>(i)] = true;
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n) - test.size());
  for (Index i = 0; i < n; ++i)
    if (!in_test[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

}  // namespace

std::vector<double> geometric_grid(double hi, double lo, int count) {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) return {hi};
  const double step = std::log(lo / hi) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) out.push_back(hi * std::exp(step * static_cast<double>(i)));
  out.back() = lo;
  return out;
}

void validate(const CvPlan& plan, Index n) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InfeasiblePlan, msg); };
  if (plan.folds < 2) fail("folds must be at least 2");
  if (plan.K_grid.empty()) fail("K grid is empty");
  if (plan.lambda_multipliers.empty()) fail("lambda multiplier grid is empty");
  if (plan.lambda_fine_count < 0) fail("lambda_fine_count must be nonnegative");
  for (int K : plan.K_grid)
    if (K < basis::kMinBasisSize) fail("K grid entries must be at least 5");
  for (double m : plan.lambda_multipliers)
    if (!(m > 0.0 && m <= 1.0)) fail("lambda multipliers must lie in (0, 1]");
  const int max_K = *std::max_element(plan.K_grid.begin(), plan.K_grid.end());
  if (n < static_cast<Index>(plan.folds) * max_K)
    fail("need n >= folds * max(K) (n = " + std::to_string(n) + ", folds = " +
         std::to_string(plan.folds) + ", max K = " + std::to_string(max_K) + ")");
}

std::vector<std::vector<Index>> fold_partition(Index n, int folds, std::uint64_t seed) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  auto rng = make_stream(seed, "cv-folds");
  for (std::size_t i = perm.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  const Index base = n / folds;
  const Index extra = n % folds;
  Index pos = 0;
  for (int f = 0; f < folds; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    out[static_cast<std::size_t>(f)].assign(perm.begin() + pos, perm.begin() + pos + size);
    std::sort(out[static_cast<std::size_t>(f)].begin(), out[static_cast<std::size_t>(f)].end());
    pos += size;
  }
  return out;
}

CvResult cv_select(const Matrix& X_in, const Vector& Y, const CvPlan& plan) {
  if (X_in.rows() != Y.size()) throw Error(ErrorCode::ShapeMismatch, "X and Y row counts differ");
  const Index n = X_in.rows();
  validate(plan, n);
  const Matrix X = plan.center_columns ? hdam::center_columns(X_in, hdam::column_means(X_in)) : X_in;

  const auto adjustment = hdam::make_adjustment(X, plan.method, plan.rho);
  const auto folds = fold_partition(n, plan.folds, plan.seed);
  std::vector<std::vector<Index>> train(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) train[f] = complement(folds[f], n);

  std::vector<double> multipliers = plan.lambda_multipliers;
  std::sort(multipliers.begin(), multipliers.end(), std::greater<>());
  multipliers.erase(std::unique(multipliers.begin(), multipliers.end()), multipliers.end());

  const std::size_t nK = plan.K_grid.size();
  const std::size_t nF = folds.size();
  const std::size_t nM = multipliers.size();

  // Full-data designs fix the lambda scale for each K.
  std::vector<hdam::PreparedDesign> designs(nK);
  std::vector<double> lmax(nK);
  parallel_for(nK, plan.jobs, [&](std::size_t k) {
    designs[k] = hdam::prepare_design(X, Y, plan.K_grid[k], adjustment);
    lmax[k] = grouplasso::lambda_max(designs[k].problem);
  });

  auto fold_problems = [&](std::size_t k, std::size_t f) {
    if (!plan.knots_per_fold) {
      return std::make_pair(grouplasso::row_subset(designs[k].problem, train[f]),
                            grouplasso::row_subset(designs[k].problem, folds[f]));
    }
    const auto design = hdam::prepare_design(X, Y, plan.K_grid[k], adjustment, train[f]);
    return std::make_pair(grouplasso::row_subset(design.problem, train[f]),
                          grouplasso::row_subset(design.problem, folds[f]));
  };

  // Stage 1: every (K, fold) pair runs the whole coarse path.
  std::vector<PathResult> stage1(nK * nF);
  parallel_for(nK * nF, plan.jobs, [&](std::size_t task) {
    const std::size_t k = task / nF;
    const std::size_t f = task % nF;
    std::vector<double> lambdas(nM);
    for (std::size_t m = 0; m < nM; ++m) lambdas[m] = lmax[k] * multipliers[m];
    const auto [tr, te] = fold_problems(k, f);
    stage1[task] = run_path(tr, te, lambdas, {}, plan.solver);
  });

  CvReport report;
  std::size_t best = 0;
  for (std::size_t k = 0; k < nK; ++k) {
    for (std::size_t m = 0; m < nM; ++m) {
      CvCell cell;
      cell.stage = 1;
      cell.K = plan.K_grid[k];
      cell.lambda = lmax[k] * multipliers[m];
      for (std::size_t f = 0; f < nF; ++f) {
        const auto& path = stage1[k * nF + f];
        cell.fold_errors.push_back(path.errors[m]);
      }
      summarize(cell);
      report.cells.push_back(std::move(cell));
      if (report.cells.size() == 1 || better(report.cells.back(), report.cells[best]))
        best = report.cells.size() - 1;
    }
  }
  for (std::size_t k = 0; k < nK; ++k)
    for (std::size_t f = 0; f < nF; ++f)
      report.cells[k * nM].nonconverged += stage1[k * nF + f].nonconverged;
  report.cells[best].chosen = true;

  const std::size_t k_star = best / nM;
  const CvCell stage1_best = report.cells[best];
  report.K_star = stage1_best.K;
  report.lambda_star = stage1_best.lambda;
  report.lambda_max_at_K_star = lmax[k_star];
  report.q_hat = adjustment.q_hat;

  if (plan.lambda_fine_count > 0) {
    const double hi = std::min(10.0 * stage1_best.lambda, lmax[k_star]);
    const double lo = stage1_best.lambda / 10.0;
    std::vector<double> lambdas = geometric_grid(hi, lo, plan.lambda_fine_count);
    const bool present = std::any_of(lambdas.begin(), lambdas.end(), [&](double l) {
      return l == stage1_best.lambda;
    });
    if (!present) lambdas.push_back(stage1_best.lambda);
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    // The stage-1 point is shared with the coarse grid and reuses its errors.
    std::vector<bool> skip(lambdas.size(), false);
    for (std::size_t m = 0; m < lambdas.size(); ++m) skip[m] = lambdas[m] == stage1_best.lambda;

    std::vector<PathResult> stage2(nF);
    parallel_for(nF, plan.jobs, [&](std::size_t f) {
      const auto [tr, te] = fold_problems(k_star, f);
      stage2[f] = run_path(tr, te, lambdas, skip, plan.solver);
    });

    const std::size_t first = report.cells.size();
    std::size_t best2 = first;
    for (std::size_t m = 0; m < lambdas.size(); ++m) {
      CvCell cell;
      cell.stage = 2;
      cell.K = report.K_star;
      cell.lambda = lambdas[m];
      if (skip[m]) {
        cell.fold_errors = stage1_best.fold_errors;
      } else {
        for (std::size_t f = 0; f < nF; ++f) cell.fold_errors.push_back(stage2[f].errors[m]);
      }
      summarize(cell);
      report.cells.push_back(std::move(cell));
      if (report.cells.size() - 1 != first && better(report.cells.back(), report.cells[best2]))
        best2 = report.cells.size() - 1;
    }
    for (std::size_t f = 0; f < nF; ++f) report.cells[first].nonconverged += stage2[f].nonconverged;
    report.cells[best2].chosen = true;
    report.lambda_star = report.cells[best2].lambda;
  }

  return CvResult{report.K_star, report.lambda_star, std::move(report)};
}

void write_report_csv(const CvReport& report, std::ostream& out) {
  out << "stage,K,lambda,mean_err,se_err,chosen\n";
  for (const auto& c : report.cells) {
    out << c.stage << ',' << c.K << ',' << io::format_double(c.lambda) << ','
        << io::format_double(c.mean_err) << ',' << io::format_double(c.se_err) << ','
        << (c.chosen ? 1 : 0) << '\n';
  }
}

}  // namespace specdeconf::modelselect
