#include "specdeconf/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace specdeconf::io {
namespace {

using nlohmann::json;

constexpr std::string_view kModelFormat = "specdeconf.hdam";
constexpr std::string_view kConfigFormat = "specdeconf.simconfig";
constexpr std::string_view kTruthFormat = "specdeconf.truth";
constexpr std::string_view kPlanFormat = "specdeconf.cvplan";

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, msg);
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed JSON: ") + e.what());
  }
}

void check_format(const json& doc, std::string_view format, int version) {
  if (!doc.is_object()) config_error("top-level JSON value must be an object");
  if (doc.contains("format") && doc["format"] != format)
    config_error("field 'format': expected \"" + std::string(format) + "\"");
  if (doc.contains("version") && doc["version"] != version)
    config_error("field 'version': unsupported version (expected " + std::to_string(version) + ")");
}

void check_known(const json& doc, const std::set<std::string>& known) {
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) config_error("field '" + key + "': unknown field");
}

template <class T>
T get_field(const json& doc, const std::string& key, T fallback) {
  if (!doc.contains(key) || doc[key].is_null()) return fallback;
  try {
    return doc[key].get<T>();
  } catch (const json::exception& e) {
    config_error("field '" + key + "': " + e.what());
  }
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j, const std::string& key) {
  try {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
  } catch (const json::exception& e) {
    config_error("field '" + key + "': " + e.what());
  }
}

json matrix_rows_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) rows.push_back(vector_json(M.row(i).transpose()));
  return rows;
}

Matrix matrix_from_rows(const json& j, Index cols, const std::string& key) {
  if (!j.is_array()) config_error("field '" + key + "': expected an array of rows");
  Matrix M(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_from(j[i], key);
    if (row.size() != cols) config_error("field '" + key + "': ragged rows");
    M.row(static_cast<Index>(i)) = row.transpose();
  }
  return M;
}

json config_json(const simgen::SimConfig& c) {
  json sigma = {{"kind", c.sigma_e.kind == simgen::ErrorCovariance::Kind::Identity ? "identity"
                                                                                 : "toeplitz"}};
  if (c.sigma_e.kind == simgen::ErrorCovariance::Kind::Toeplitz) sigma["rho"] = c.sigma_e.rho;
  return {{"format", kConfigFormat},
          {"version", 1},
          {"n", c.n},
          {"p", c.p},
          {"q", c.q},
          {"influence", simgen::to_string(c.influence)},
          {"cs", c.cs},
          {"prop", c.prop},
          {"sigma_e", sigma},
          {"noise_sd", c.noise_sd},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"seed", c.seed},
          {"replicate", c.replicate}};
}

simgen::SimConfig config_from(const json& doc) {
  check_format(doc, kConfigFormat, 1);
  check_known(doc, {"format", "version", "n", "p", "q", "influence", "cs", "prop", "sigma_e",
                    "noise_sd", "alpha", "beta", "seed", "replicate"});
  simgen::SimConfig c;
  c.n = get_field<Index>(doc, "n", c.n);
  c.p = get_field<Index>(doc, "p", c.p);
  c.q = get_field<Index>(doc, "q", c.q);
  try {
    c.influence = simgen::parse_influence(
        get_field<std::string>(doc, "influence", std::string(simgen::to_string(c.influence))));
  } catch (const Error& e) {
    config_error(std::string("field 'influence': ") + e.what());
  }
  c.cs = get_field<double>(doc, "cs", c.cs);
  c.prop = get_field<double>(doc, "prop", c.prop);
  c.noise_sd = get_field<double>(doc, "noise_sd", c.noise_sd);
  c.alpha = get_field<double>(doc, "alpha", c.alpha);
  c.beta = get_field<double>(doc, "beta", c.beta);
  c.seed = get_field<std::uint64_t>(doc, "seed", c.seed);
  c.replicate = get_field<std::uint64_t>(doc, "replicate", c.replicate);
  if (doc.contains("sigma_e")) {
    const json& s = doc["sigma_e"];
    const std::string kind = s.is_string() ? s.get<std::string>()
                                           : get_field<std::string>(s, "kind", "identity");
    if (kind == "identity") {
      c.sigma_e = simgen::ErrorCovariance::identity();
    } else if (kind == "toeplitz") {
      if (!s.is_object() || !s.contains("rho")) config_error("field 'sigma_e.rho': required for toeplitz");
      c.sigma_e = simgen::ErrorCovariance::toeplitz(get_field<double>(s, "rho", 0.0));
    } else {
      config_error("field 'sigma_e.kind': expected identity or toeplitz");
    }
  }
  try {
    simgen::validate(c);
  } catch (const Error& e) {
    config_error(e.what());
  }
  return c;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

Matrix read_matrix_csv(const std::filesystem::path& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && skip_header) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Index count = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      std::size_t b = pos;
      std::size_t e = end;
      while (b < e && (line[b] == ' ' || line[b] == '\t')) ++b;
      while (e > b && (line[e - 1] == ' ' || line[e - 1] == '\t')) --e;
      double v = 0.0;
      const auto res = std::from_chars(line.data() + b, line.data() + e, v);
      if (res.ec != std::errc() || res.ptr != line.data() + e)
        throw Error(ErrorCode::ShapeMismatch, path.string() + ":" + std::to_string(line_no) +
                                                  ": not a number: '" + line.substr(b, e - b) + "'");
      values.push_back(v);
      ++count;
      if (end >= line.size()) break;
      pos = end + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols)
      throw Error(ErrorCode::ShapeMismatch, path.string() + ":" + std::to_string(line_no) +
                                                ": expected " + std::to_string(cols) +
                                                " columns, found " + std::to_string(count));
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::ShapeMismatch, path.string() + ": no data rows");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, cols);
}

Vector read_vector_csv(const std::filesystem::path& path, bool skip_header) {
  const Matrix M = read_matrix_csv(path, skip_header);
  if (M.cols() == 1) return M.col(0);
  if (M.rows() == 1) return M.row(0).transpose();
  throw Error(ErrorCode::ShapeMismatch, path.string() + ": expected a single column");
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& M) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  std::string line;
  for (Index i = 0; i < M.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) line += ',';
      line += format_double(M(i, j));
    }
    line += '\n';
    out << line;
  }
}

void write_vector_csv(const std::filesystem::path& path, const Vector& v) {
  write_matrix_csv(path, Matrix(v));
}

std::string model_to_json(const hdam::FittedHdam& fit) {
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = 1;
  doc["method"] = hdam::to_string(fit.method);
  doc["K"] = fit.K;
  doc["lambda"] = fit.lambda;
  doc["rho"] = fit.method == hdam::Method::Deconfounded ? json(fit.rho) : json(nullptr);
  doc["q_hat"] = fit.q_hat ? json(*fit.q_hat) : json(nullptr);
  doc["beta0"] = fit.beta0;
  doc["gamma"] = fit.gamma ? vector_json(*fit.gamma) : json(nullptr);
  doc["centering"] = fit.centering ? vector_json(*fit.centering) : json(nullptr);
  doc["solver"] = {{"iterations", fit.solver.iterations},
                   {"converged", fit.solver.converged},
                   {"objective", fit.solver.objective},
                   {"kkt_residual", fit.solver.kkt_residual}};
  json comps = json::array();
  for (const auto& c : fit.components)
    comps.push_back({{"knots", c.spec.knots()}, {"beta", vector_json(c.beta)}, {"strength", c.strength}});
  doc["components"] = std::move(comps);
  return doc.dump(1) + "\n";
}

hdam::FittedHdam model_from_json(const std::string& text) {
  const json doc = parse_json(text);
  check_format(doc, kModelFormat, 1);
  hdam::FittedHdam fit;
  try {
    fit.method = hdam::parse_method(doc.at("method").get<std::string>());
    fit.K = doc.at("K").get<int>();
    fit.lambda = doc.at("lambda").get<double>();
    fit.rho = get_field<double>(doc, "rho", 0.5);
    if (doc.contains("q_hat") && !doc["q_hat"].is_null()) fit.q_hat = doc["q_hat"].get<Index>();
    fit.beta0 = doc.at("beta0").get<double>();
    if (doc.contains("gamma") && !doc["gamma"].is_null()) fit.gamma = vector_from(doc["gamma"], "gamma");
    if (doc.contains("centering") && !doc["centering"].is_null())
      fit.centering = vector_from(doc["centering"], "centering");
    if (doc.contains("solver")) {
      const json& s = doc["solver"];
      fit.solver = {get_field<int>(s, "iterations", 0), get_field<bool>(s, "converged", true),
                    get_field<double>(s, "objective", 0.0), get_field<double>(s, "kkt_residual", 0.0)};
    }
    for (const auto& c : doc.at("components")) {
      basis::BasisSpec spec(c.at("knots").get<std::vector<double>>());
      Vector beta = vector_from(c.at("beta"), "components.beta");
      if (beta.size() != spec.size()) config_error("component coefficient length does not match knots");
      const double strength = c.at("strength").get<double>();
      fit.components.push_back(hdam::ComponentFit{std::move(spec), std::move(beta), strength,
                                                  Matrix(), Vector(), 0.0});
    }
  } catch (const json::exception& e) {
    config_error(std::string("model document: ") + e.what());
  }
  if (fit.centering && fit.centering->size() != fit.covariates())
    config_error("field 'centering': length does not match the number of components");
  return fit;
}

simgen::SimConfig sim_config_from_json(const std::string& text) {
  return config_from(parse_json(text));
}

std::string sim_config_to_json(const simgen::SimConfig& config) {
  return config_json(config).dump(1) + "\n";
}

std::string truth_to_json(const simgen::SimTruth& truth) {
  json doc;
  doc["format"] = kTruthFormat;
  doc["version"] = 1;
  doc["seed"] = truth.config.seed;
  doc["config"] = config_json(truth.config);
  doc["Psi"] = matrix_rows_json(truth.Psi);
  doc["psi"] = vector_json(truth.psi);
  doc["active_set"] = {1, 2, 3, 4};
  return doc.dump(1) + "\n";
}

simgen::SimTruth truth_from_json(const std::string& text) {
  const json doc = parse_json(text);
  check_format(doc, kTruthFormat, 1);
  simgen::SimTruth truth;
  if (!doc.contains("config")) config_error("field 'config': required");
  truth.config = config_from(doc["config"]);
  if (!doc.contains("Psi") || !doc.contains("psi")) config_error("fields 'Psi' and 'psi' are required");
  truth.Psi = matrix_from_rows(doc["Psi"], truth.config.p, "Psi");
  truth.psi = vector_from(doc["psi"], "psi");
  if (truth.Psi.rows() != truth.config.q || truth.psi.size() != truth.config.q)
    config_error("Psi/psi shapes do not match config.q");
  return truth;
}

modelselect::CvPlan cv_plan_from_json(const std::string& text, modelselect::CvPlan plan) {
  const json doc = parse_json(text);
  check_format(doc, kPlanFormat, 1);
  check_known(doc, {"format", "version", "folds", "K_grid", "lambda_multipliers",
                    "lambda_fine_count", "seed", "method", "rho", "center_columns",
                    "knots_per_fold", "tol", "max_iter", "jobs"});
  plan.folds = get_field<int>(doc, "folds", plan.folds);
  plan.K_grid = get_field<std::vector<int>>(doc, "K_grid", plan.K_grid);
  plan.lambda_multipliers = get_field<std::vector<double>>(doc, "lambda_multipliers", plan.lambda_multipliers);
  plan.lambda_fine_count = get_field<int>(doc, "lambda_fine_count", plan.lambda_fine_count);
  plan.seed = get_field<std::uint64_t>(doc, "seed", plan.seed);
  if (doc.contains("method")) {
    try {
      plan.method = hdam::parse_method(get_field<std::string>(doc, "method", ""));
    } catch (const Error& e) {
      config_error(std::string("field 'method': ") + e.what());
    }
  }
  plan.rho = get_field<double>(doc, "rho", plan.rho);
  plan.center_columns = get_field<bool>(doc, "center_columns", plan.center_columns);
  plan.knots_per_fold = get_field<bool>(doc, "knots_per_fold", plan.knots_per_fold);
  plan.solver.tol = get_field<double>(doc, "tol", plan.solver.tol);
  plan.solver.max_iter = get_field<int>(doc, "max_iter", plan.solver.max_iter);
  plan.jobs = get_field<int>(doc, "jobs", plan.jobs);
  return plan;
}

}  // namespace specdeconf::io
