#include "specdeconf/experiment.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "specdeconf/io.hpp"
#include "specdeconf/parallel.hpp"
#include "specdeconf/rng.hpp"

namespace specdeconf::experiment {
namespace {

std::string sigma_label(const simgen::ErrorCovariance& s) {
  if (s.kind == simgen::ErrorCovariance::Kind::Identity) return "identity";
  return "toeplitz(" + io::format_double(s.rho) + ")";
}

struct Grid {
  simgen::SimConfig base;
  std::string parameter;
  std::vector<std::vector<double>> values;  // one entry per grid point
};

Grid grid_for(const std::string& name, bool desk) {
  Grid g;
  g.base.q = 5;
  auto single = [](std::initializer_list<double> xs) {
    std::vector<std::vector<double>> out;
    for (double x : xs) out.push_back({x});
    return out;
  };
  if (name == "var-n") {
    g.parameter = "n";
    g.base.p = 300;
    g.values = desk ? single({100, 150, 300}) : single({50, 100, 200, 400, 800});
  } else if (name == "var-p") {
    g.parameter = "p";
    g.base.n = desk ? 150 : 300;
    g.values = desk ? single({50, 150, 300}) : single({50, 100, 200, 400, 800});
  } else if (name == "var-cs") {
    g.parameter = "cs";
    g.base.n = desk ? 150 : 400;
    g.base.p = desk ? 300 : 500;
    g.values = desk ? single({0, 0.5, 1, 2, 3}) : single({0, 0.5, 1, 1.5, 2, 2.5, 3});
  } else if (name == "var-prop") {
    g.parameter = "prop";
    g.base.n = desk ? 150 : 400;
    g.base.p = desk ? 300 : 500;
    g.values = desk ? single({0, 0.1, 0.3, 0.6, 1}) : single({0, 0.1, 0.2, 0.3, 0.5, 0.75, 1});
  } else if (name == "nonlinear-grid") {
    g.parameter = "alpha,beta";
    g.base.n = desk ? 150 : 400;
    g.base.p = desk ? 300 : 500;
    const std::vector<double> levels =
        desk ? std::vector<double>{0, 0.5, 1} : std::vector<double>{0, 0.25, 0.5, 0.75, 1};
    for (double a : levels)
      for (double b : levels) g.values.push_back({a, b});
  } else {
    std::string valid;
    for (const auto& n : experiment_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::InvalidConfig, "unknown experiment '" + name + "' (valid: " + valid + ")");
  }
  return g;
}

void apply_point(simgen::SimConfig& c, const std::string& parameter, const std::vector<double>& v) {
  if (parameter == "n") c.n = static_cast<Index>(v[0]);
  else if (parameter == "p") c.p = static_cast<Index>(v[0]);
  else if (parameter == "cs") c.cs = v[0];
  else if (parameter == "prop") c.prop = v[0];
  else {
    c.alpha = v[0];
    c.beta = v[1];
  }
}

std::string point_label(const std::string& parameter, const std::vector<double>& v) {
  if (v.size() == 2) return "alpha=" + io::format_double(v[0]) + ",beta=" + io::format_double(v[1]);
  return parameter + "=" + io::format_double(v[0]);
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"var-n", "var-p", "var-cs", "var-prop",
                                              "nonlinear-grid"};
  return names;
}

modelselect::CvPlan adapt_plan(modelselect::CvPlan plan, Index n) {
  std::vector<int> ks;
  for (int K : plan.K_grid)
    if (static_cast<Index>(plan.folds) * K <= n) ks.push_back(K);
  if (ks.empty() && !plan.K_grid.empty())
    ks.push_back(*std::min_element(plan.K_grid.begin(), plan.K_grid.end()));
  plan.K_grid = std::move(ks);
  return plan;
}

MethodOutcome evaluate_method(const simgen::SimDraw& draw, hdam::Method method,
                              const modelselect::CvPlan& plan_in, Index n_mc,
                              std::uint64_t mc_seed) {
  modelselect::CvPlan plan = adapt_plan(plan_in, draw.X.rows());
  plan.method = method;
  const auto cv = modelselect::cv_select(draw.X, draw.Y, plan);

  hdam::FitOptions opts;
  opts.K = cv.K;
  opts.lambda = cv.lambda;
  opts.rho = plan.rho;
  opts.center_columns = plan.center_columns;
  opts.allow_nonconverged = true;
  opts.solver.tol = std::min(plan.solver.tol, 1e-7);
  opts.solver.max_iter = std::max(plan.solver.max_iter, 10000);

  MethodOutcome out;
  out.method = method;
  out.fit = hdam::fit(draw.X, draw.Y, method, opts);
  out.mse = metrics::mse_l2(out.fit, draw.truth, n_mc, mc_seed);
  out.active_size = static_cast<Index>(hdam::active_set(out.fit).size());
  out.screening = metrics::screening(out.fit);
  out.K = cv.K;
  out.lambda = cv.lambda;
  out.q_hat = out.fit.q_hat;
  out.converged = out.fit.solver.converged;
  return out;
}

std::vector<Scenario> build_scenarios(const ExperimentOptions& options) {
  const Grid grid = grid_for(options.name, options.desk_scale);
  std::vector<Scenario> out;
  for (auto influence : options.influences) {
    for (const auto& sigma : options.sigmas) {
      for (const auto& point : grid.values) {
        simgen::SimConfig c = grid.base;
        c.influence = influence;
        c.sigma_e = sigma;
        c.seed = options.seed;
        apply_point(c, grid.parameter, point);
        simgen::validate(c);
        out.push_back({options.name + "/" + std::string(simgen::to_string(influence)) + "/" +
                           sigma_label(sigma) + "/" + point_label(grid.parameter, point),
                       c});
      }
    }
  }
  return out;
}

std::vector<ResultRow> run_experiment(const ExperimentOptions& options) {
  const auto scenarios = build_scenarios(options);
  const int reps = options.replicates.value_or(options.desk_scale ? 20 : 100);
  if (reps < 1) throw Error(ErrorCode::InvalidConfig, "replicates must be positive");
  const std::size_t nM = options.methods.size();
  const std::size_t cells = scenarios.size() * static_cast<std::size_t>(reps);

  std::vector<std::vector<MethodOutcome>> outcomes(cells);
  parallel_for(cells, options.jobs, [&](std::size_t cell) {
    const auto& scenario = scenarios[cell / static_cast<std::size_t>(reps)];
    const auto rep = static_cast<std::uint64_t>(cell % static_cast<std::size_t>(reps));
    simgen::SimConfig config = scenario.config;
    config.replicate = rep;
    const auto draw = simgen::gen_dataset(config);
    modelselect::CvPlan plan = options.plan;
    plan.jobs = 1;
    plan.seed = stream_key(options.plan.seed, "cv", rep);
    const std::uint64_t mc_seed = stream_key(options.seed, "mse", rep);
    outcomes[cell].reserve(nM);
    for (auto method : options.methods)
      outcomes[cell].push_back(evaluate_method(draw, method, plan, options.n_mc, mc_seed));
  });

  std::vector<ResultRow> rows;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const auto& scenario = scenarios[cell / static_cast<std::size_t>(reps)];
    const int rep = static_cast<int>(cell % static_cast<std::size_t>(reps));
    for (const auto& o : outcomes[cell]) {
      const std::string method(hdam::to_string(o.method));
      auto add = [&](const char* metric, double value) {
        rows.push_back({scenario.key, method, rep, metric, value});
      };
      add("mse", o.mse.mse);
      add("mse_se", o.mse.standard_error);
      add("active_size", static_cast<double>(o.active_size));
      add("screening", o.screening ? 1.0 : 0.0);
      add("K", o.K);
      add("lambda", o.lambda);
      if (o.q_hat) add("q_hat", static_cast<double>(*o.q_hat));
      add("converged", o.converged ? 1.0 : 0.0);
    }
  }
  return rows;
}

void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  out << "scenario,method,replicate,metric,value\n";
  for (const auto& r : rows) {
    // Scenario keys may contain commas (alpha=..,beta=..); quote them.
    out << '"' << r.scenario << "\"," << r.method << ',' << r.replicate << ',' << r.metric << ','
        << io::format_double(r.value) << '\n';
  }
}

}  // namespace specdeconf::experiment
