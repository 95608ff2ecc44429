#pragma once

#include <filesystem>
#include <string>

#include "specdeconf/hdam.hpp"
#include "specdeconf/modelselect.hpp"
#include "specdeconf/simgen.hpp"

namespace specdeconf::io {

/// Shortest decimal that round-trips to the same double; locale independent.
std::string format_double(double value);

/// Comma-separated numeric table without header. Blank lines are skipped.
/// With skip_header the first line is dropped.
Matrix read_matrix_csv(const std::filesystem::path& path, bool skip_header = false);
/// Single column (or single row) file.
Vector read_vector_csv(const std::filesystem::path& path, bool skip_header = false);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& M);
void write_vector_csv(const std::filesystem::path& path, const Vector& v);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Model document "specdeconf.hdam" version 1; see docs/formats.md.
std::string model_to_json(const hdam::FittedHdam& fit);
hdam::FittedHdam model_from_json(const std::string& text);

/// Simulation config "specdeconf.simconfig" version 1. Unknown fields and
/// type errors raise InvalidConfig naming the field.
simgen::SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const simgen::SimConfig& config);

/// Truth sidecar: config, seed, Psi (q rows), psi.
std::string truth_to_json(const simgen::SimTruth& truth);
simgen::SimTruth truth_from_json(const std::string& text);

/// CV plan "specdeconf.cvplan" version 1; absent fields keep their defaults.
modelselect::CvPlan cv_plan_from_json(const std::string& text, modelselect::CvPlan defaults = {});

}  // namespace specdeconf::io
