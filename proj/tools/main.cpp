// specdeconf: simulate, fit, cross-validate and inspect high-dimensional
// additive models under hidden confounding. All data goes through CSV/JSON.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specdeconf/diagnostics.hpp"
#include "specdeconf/experiment.hpp"
#include "specdeconf/hdam.hpp"
#include "specdeconf/io.hpp"
#include "specdeconf/metrics.hpp"
#include "specdeconf/modelselect.hpp"
#include "specdeconf/parallel.hpp"
#include "specdeconf/simgen.hpp"

namespace fs = std::filesystem;
using namespace specdeconf;

namespace {

enum Exit { kOk = 0, kUsage = 2, kShape = 3, kNumerical = 4 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidRho:
    case ErrorCode::InvalidQ:
    case ErrorCode::InfeasiblePlan:
    case ErrorCode::Io:
      return kUsage;
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DegenerateColumn:
    case ErrorCode::TooFewSamples:
    case ErrorCode::NonFinite:
      return kShape;
    default:
      return kNumerical;
  }
}

// Writes to `path`, or stdout when it is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::write_text(path, text);
  }
}

struct DataArgs {
  std::string x_path;
  std::string y_path;
  bool header = false;
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool need_y) {
  cmd->add_option("--x", a.x_path, "Covariate matrix CSV (n rows x p columns)")->required()->check(CLI::ExistingFile);
  if (need_y) cmd->add_option("--y", a.y_path, "Response CSV (one column)")->required()->check(CLI::ExistingFile);
  cmd->add_flag("--header", a.header, "Skip the first line of each CSV");
}

std::pair<Matrix, Vector> load_xy(const DataArgs& a) {
  Matrix X = io::read_matrix_csv(a.x_path, a.header);
  Vector Y = io::read_vector_csv(a.y_path, a.header);
  if (X.rows() != Y.size())
    throw Error(ErrorCode::ShapeMismatch, "X has " + std::to_string(X.rows()) + " rows but Y has " +
                                              std::to_string(Y.size()));
  return {std::move(X), std::move(Y)};
}

std::string summary(const hdam::FittedHdam& fit) {
  std::ostringstream out;
  const auto active = hdam::active_set(fit);
  out << "method        " << hdam::to_string(fit.method) << '\n'
      << "K             " << fit.K << '\n'
      << "lambda        " << io::format_double(fit.lambda) << '\n';
  if (fit.method == hdam::Method::Deconfounded) out << "rho           " << io::format_double(fit.rho) << '\n';
  if (fit.q_hat) out << "q_hat         " << *fit.q_hat << '\n';
  out << "beta0         " << io::format_double(fit.beta0) << '\n'
      << "active groups " << active.size() << " of " << fit.covariates() << '\n'
      << "solver        " << fit.solver.iterations << " sweeps, "
      << (fit.solver.converged ? "converged" : "NOT converged") << ", kkt "
      << io::format_double(fit.solver.kkt_residual) << '\n';
  const auto ranking = metrics::strength_ranking(fit);
  const std::size_t top = std::min<std::size_t>(10, active.size());
  if (top) out << "top strengths (covariate: ||beta_j||)\n";
  for (std::size_t i = 0; i < top; ++i)
    out << "  " << ranking[i].first + 1 << ": " << io::format_double(ranking[i].second) << '\n';
  return out.str();
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out_dir = ".";
};

int run_simulate(const SimulateArgs& a) {
  const auto config = io::sim_config_from_json(io::read_text(a.config));
  const auto draw = simgen::gen_dataset(config);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  io::write_matrix_csv(dir / "X.csv", draw.X);
  io::write_vector_csv(dir / "Y.csv", draw.Y);
  io::write_text(dir / "truth.json", io::truth_to_json(draw.truth));
  std::cerr << "wrote " << draw.X.rows() << " x " << draw.X.cols() << " design to " << dir.string() << '\n';
  return kOk;
}

// --- fit / predict ----------------------------------------------------------

struct FitArgs {
  DataArgs data;
  std::string method = "deconfounded";
  int K = 7;
  double lambda = 0.0;
  double rho = 0.5;
  bool center = false;
  bool allow_nonconverged = false;
  double tol = 1e-7;
  int max_iter = 10000;
  std::string out = "model.json";
};

int run_fit(const FitArgs& a) {
  const auto [X, Y] = load_xy(a.data);
  hdam::FitOptions o;
  o.K = a.K;
  o.lambda = a.lambda;
  o.rho = a.rho;
  o.center_columns = a.center;
  o.allow_nonconverged = a.allow_nonconverged;
  o.solver.tol = a.tol;
  o.solver.max_iter = a.max_iter;
  const auto fit = hdam::fit(X, Y, hdam::parse_method(a.method), o);
  io::write_text(a.out, io::model_to_json(fit));
  std::cout << summary(fit);
  return kOk;
}

struct PredictArgs {
  std::string model;
  std::string x_path;
  bool header = false;
  std::string out;
};

int run_predict(const PredictArgs& a) {
  const auto fit = io::model_from_json(io::read_text(a.model));
  const Matrix X = io::read_matrix_csv(a.x_path, a.header);
  const Vector yhat = hdam::predict(fit, X);
  std::string text;
  for (Index i = 0; i < yhat.size(); ++i) text += io::format_double(yhat[i]) + '\n';
  emit(a.out, text);
  return kOk;
}

// --- cv -------------------------------------------------------------------

struct CvArgs {
  DataArgs data;
  std::string plan;
  std::optional<std::string> method;
  std::optional<int> folds;
  std::optional<std::uint64_t> seed;
  int jobs = default_jobs();
  bool center = false;
  std::string out_dir = ".";
};

int run_cv(const CvArgs& a) {
  const auto [X, Y] = load_xy(a.data);
  modelselect::CvPlan plan;
  plan.jobs = a.jobs;
  if (!a.plan.empty()) plan = io::cv_plan_from_json(io::read_text(a.plan), plan);
  if (a.method) plan.method = hdam::parse_method(*a.method);
  if (a.folds) plan.folds = *a.folds;
  if (a.seed) plan.seed = *a.seed;
  if (a.center) plan.center_columns = true;

  const auto cv = modelselect::cv_select(X, Y, plan);
  hdam::FitOptions o;
  o.K = cv.K;
  o.lambda = cv.lambda;
  o.rho = plan.rho;
  o.center_columns = plan.center_columns;
  o.solver.tol = std::min(plan.solver.tol, 1e-7);
  o.solver.max_iter = std::max(plan.solver.max_iter, 10000);
  const auto fit = hdam::fit(X, Y, plan.method, o);

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  std::ostringstream report;
  modelselect::write_report_csv(cv.report, report);
  io::write_text(dir / "cv_report.csv", report.str());
  io::write_text(dir / "model.json", io::model_to_json(fit));
  std::cout << "selected K = " << cv.K << ", lambda = " << io::format_double(cv.lambda) << " ("
            << io::format_double(cv.lambda / cv.report.lambda_max_at_K_star) << " x lambda_max)\n"
            << summary(fit);
  return kOk;
}

// --- experiment -------------------------------------------------------------

struct ExperimentArgs {
  std::string name;
  std::optional<int> replicates;
  std::uint64_t seed = 1;
  bool desk = false;
  int jobs = default_jobs();
  std::vector<std::string> influences;
  std::vector<std::string> sigmas;
  std::vector<std::string> methods;
  std::string plan;
  Index n_mc = metrics::kDefaultMonteCarloRows;
  std::string out = "results.csv";
};

simgen::ErrorCovariance parse_sigma(const std::string& s) {
  if (s == "identity") return simgen::ErrorCovariance::identity();
  const std::string prefix = "toeplitz:";
  if (s.rfind(prefix, 0) == 0) {
    try {
      return simgen::ErrorCovariance::toeplitz(std::stod(s.substr(prefix.size())));
    } catch (const std::logic_error&) {
    }
  }
  throw Error(ErrorCode::InvalidConfig, "--sigma expects 'identity' or 'toeplitz:RHO', got '" + s + "'");
}

int run_experiment(const ExperimentArgs& a) {
  experiment::ExperimentOptions o;
  o.name = a.name;
  o.replicates = a.replicates;
  o.seed = a.seed;
  o.desk_scale = a.desk;
  o.jobs = a.jobs;
  o.n_mc = a.n_mc;
  if (!a.plan.empty()) o.plan = io::cv_plan_from_json(io::read_text(a.plan), o.plan);
  if (!a.influences.empty()) {
    o.influences.clear();
    for (const auto& s : a.influences) o.influences.push_back(simgen::parse_influence(s));
  }
  if (!a.sigmas.empty()) {
    o.sigmas.clear();
    for (const auto& s : a.sigmas) o.sigmas.push_back(parse_sigma(s));
  }
  if (!a.methods.empty()) {
    o.methods.clear();
    for (const auto& m : a.methods) o.methods.push_back(hdam::parse_method(m));
  }
  // Surface unknown names before any work starts.
  const auto scenarios = experiment::build_scenarios(o);
  std::cerr << a.name << ": " << scenarios.size() << " scenarios x "
            << o.replicates.value_or(o.desk_scale ? 20 : 100) << " replicates on " << o.jobs
            << " worker(s)\n";
  const auto rows = experiment::run_experiment(o);
  std::ostringstream csv;
  experiment::write_results_csv(rows, csv);
  emit(a.out, csv.str());
  return kOk;
}

// --- spectrum / diagnose ----------------------------------------------------

struct SpectrumArgs {
  std::string x_path;
  bool header = false;
  bool center = false;
  std::string out;
};

int run_spectrum(const SpectrumArgs& a) {
  Matrix X = io::read_matrix_csv(a.x_path, a.header);
  if (a.center) X = hdam::center_columns(X, hdam::column_means(X));
  const Vector d = diagnostics::singular_values(X);
  std::string text;
  for (Index l = 0; l < d.size(); ++l) text += io::format_double(d[l]) + '\n';
  emit(a.out, text);
  return kOk;
}

struct DiagnoseArgs {
  std::string truth;
  std::string x_path;
  bool header = false;
  double rho = 0.5;
  std::string out;
};

int run_diagnose(const DiagnoseArgs& a) {
  const auto truth = io::truth_from_json(io::read_text(a.truth));
  const Matrix sigma = simgen::error_covariance_matrix(truth.config.sigma_e, truth.config.p);
  std::ostringstream out;
  out << "{\n  \"compatibility_lower_bound\": "
      << io::format_double(diagnostics::compatibility_lower_bound(truth.Psi, sigma));
  if (!a.x_path.empty()) {
    const Matrix X = io::read_matrix_csv(a.x_path, a.header);
    const auto leak = diagnostics::confounding_leakage(X, truth.Psi, truth.psi, sigma, a.rho);
    out << ",\n  \"leak_before\": " << io::format_double(leak.before)
        << ",\n  \"leak_after\": " << io::format_double(leak.after)
        << ",\n  \"leak_ratio\": "
        << (leak.before > 0 ? io::format_double(leak.after / leak.before) : std::string("null"));
  }
  out << "\n}\n";
  emit(a.out, out.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral deconfounding for high-dimensional additive models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "specdeconf 0.1.0");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw a synthetic confounded dataset");
  c_sim->add_option("--config", sim.config, "Simulation config JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out", sim.out_dir, "Output directory (X.csv, Y.csv, truth.json)");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit one model at fixed K and lambda");
  add_data_options(c_fit, fit.data, true);
  c_fit->add_option("--method", fit.method, "deconfounded | naive | estimated-factors")
      ->check(CLI::IsMember({"deconfounded", "naive", "estimated-factors"}));
  c_fit->add_option("--K", fit.K, "Basis functions per covariate (>= 5)");
  c_fit->add_option("--lambda", fit.lambda, "Group-lasso penalty")->required();
  c_fit->add_option("--rho", fit.rho, "Trim level for the deconfounded method");
  c_fit->add_flag("--center-columns", fit.center, "Center the columns of X first");
  c_fit->add_flag("--allow-nonconverged", fit.allow_nonconverged, "Keep a fit whose solver hit max-iter");
  c_fit->add_option("--tol", fit.tol, "Solver tolerance");
  c_fit->add_option("--max-iter", fit.max_iter, "Solver sweep limit");
  c_fit->add_option("--out", fit.out, "Model JSON path");

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Evaluate a saved model on new rows");
  c_pred->add_option("--model", pred.model, "Model JSON")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--x", pred.x_path, "Covariate CSV")->required()->check(CLI::ExistingFile);
  c_pred->add_flag("--header", pred.header, "Skip the first line of the CSV");
  c_pred->add_option("--out", pred.out, "Output CSV (default stdout)");

  CvArgs cv;
  auto* c_cv = app.add_subcommand("cv", "Two-stage cross-validation, then refit");
  add_data_options(c_cv, cv.data, true);
  c_cv->add_option("--plan", cv.plan, "CV plan JSON")->check(CLI::ExistingFile);
  c_cv->add_option("--method", cv.method, "Overrides the plan's method")
      ->check(CLI::IsMember({"deconfounded", "naive", "estimated-factors"}));
  c_cv->add_option("--folds", cv.folds, "Overrides the plan's fold count");
  c_cv->add_option("--seed", cv.seed, "Overrides the plan's fold seed");
  c_cv->add_option("--jobs", cv.jobs, "Worker threads (default $SPECDECONF_JOBS or 1)");
  c_cv->add_flag("--center-columns", cv.center, "Center the columns of X first");
  c_cv->add_option("--out", cv.out_dir, "Output directory (cv_report.csv, model.json)");

  ExperimentArgs ex;
  auto* c_ex = app.add_subcommand("experiment", "Run a named simulation study");
  std::string names;
  for (const auto& n : experiment::experiment_names()) names += (names.empty() ? "" : ", ") + n;
  c_ex->add_option("name", ex.name, "One of: " + names)->required();
  c_ex->add_option("--replicates", ex.replicates, "Replicates per scenario (default 100, 20 with --desk-scale)");
  c_ex->add_option("--seed", ex.seed, "Master seed");
  c_ex->add_flag("--desk-scale", ex.desk, "Smaller n, p and grids");
  c_ex->add_option("--jobs", ex.jobs, "Worker threads (default $SPECDECONF_JOBS or 1)");
  c_ex->add_option("--influence", ex.influences, "equal and/or decreasing (default both)");
  c_ex->add_option("--sigma", ex.sigmas, "identity or toeplitz:RHO, repeatable (default identity)");
  c_ex->add_option("--method", ex.methods, "Restrict methods (default all three)");
  c_ex->add_option("--plan", ex.plan, "CV plan JSON")->check(CLI::ExistingFile);
  c_ex->add_option("--n-mc", ex.n_mc, "Monte-Carlo rows for the L2 error");
  c_ex->add_option("--out", ex.out, "Results CSV ('-' for stdout)");

  SpectrumArgs spec;
  auto* c_spec = app.add_subcommand("spectrum", "Singular values of X, one per line");
  c_spec->add_option("--x", spec.x_path, "Covariate CSV")->required()->check(CLI::ExistingFile);
  c_spec->add_flag("--header", spec.header, "Skip the first line of the CSV");
  c_spec->add_flag("--center", spec.center, "Center the columns first");
  c_spec->add_option("--out", spec.out, "Output CSV (default stdout)");

  DiagnoseArgs diag;
  auto* c_diag = app.add_subcommand("diagnose", "Compatibility bound and confounding leakage");
  c_diag->add_option("--truth", diag.truth, "truth.json from simulate")->required()->check(CLI::ExistingFile);
  c_diag->add_option("--x", diag.x_path, "Design to measure leakage on")->check(CLI::ExistingFile);
  c_diag->add_flag("--header", diag.header, "Skip the first line of the CSV");
  c_diag->add_option("--rho", diag.rho, "Trim level");
  c_diag->add_option("--out", diag.out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*c_sim) return run_simulate(sim);
    if (*c_fit) return run_fit(fit);
    if (*c_pred) return run_predict(pred);
    if (*c_cv) return run_cv(cv);
    if (*c_ex) return run_experiment(ex);
    if (*c_spec) return run_spectrum(spec);
    if (*c_diag) return run_diagnose(diag);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
