#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "specdeconf/hdam.hpp"
#include "specdeconf/metrics.hpp"
#include "specdeconf/modelselect.hpp"
#include "specdeconf/simgen.hpp"

namespace specdeconf::experiment {

/// Result of cross-validating, refitting and scoring one method on one draw.
struct MethodOutcome {
  hdam::Method method = hdam::Method::Deconfounded;
  metrics::MseEstimate mse;
  Index active_size = 0;
  bool screening = false;
  int K = 0;
  double lambda = 0.0;
  std::optional<Index> q_hat;
  bool converged = true;
  hdam::FittedHdam fit;
};

/// The plan's K grid restricted to values the sample size can support
/// (folds * K <= n); keeps the smallest K if none qualifies.
modelselect::CvPlan adapt_plan(modelselect::CvPlan plan, Index n);

MethodOutcome evaluate_method(const simgen::SimDraw& draw, hdam::Method method,
                              const modelselect::CvPlan& plan, Index n_mc,
                              std::uint64_t mc_seed);

struct Scenario {
  std::string key;
  simgen::SimConfig config;
};

/// var-n, var-p, var-cs, var-prop, nonlinear-grid.
const std::vector<std::string>& experiment_names();

struct ExperimentOptions {
  std::string name;
  std::optional<int> replicates;  // default: 100, or 20 at desk scale
  std::uint64_t seed = 1;
  bool desk_scale = false;
  std::vector<simgen::Influence> influences{simgen::Influence::Equal,
                                            simgen::Influence::Decreasing};
  std::vector<simgen::ErrorCovariance> sigmas{simgen::ErrorCovariance::identity()};
  std::vector<hdam::Method> methods{hdam::Method::Deconfounded, hdam::Method::Naive,
                                    hdam::Method::EstimatedFactors};
  modelselect::CvPlan plan{};
  Index n_mc = metrics::kDefaultMonteCarloRows;
  int jobs = 1;
};

/// Throws InvalidConfig for unknown names.
std::vector<Scenario> build_scenarios(const ExperimentOptions& options);

struct ResultRow {
  std::string scenario;
  std::string method;
  int replicate = 0;
  std::string metric;
  double value = 0.0;
};

/// Every (scenario, replicate, method) cell, ordered by scenario, replicate,
/// method and metric regardless of completion order.
std::vector<ResultRow> run_experiment(const ExperimentOptions& options);

/// Columns: scenario,method,replicate,metric,value
void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out);

}  // namespace specdeconf::experiment
