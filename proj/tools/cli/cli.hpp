#pragma once

// Command-line front end: JSON run configs, subcommands and file outputs.

#include "dpc/atomgeo.hpp"
#include "dpc/ocp.hpp"
#include "dpc/predictor.hpp"
#include "dpc/simcore.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpc::cli {

enum ExitCode : int { exit_ok = 0, exit_schema = 2, exit_numerical = 3, exit_verification = 4 };

struct DataConfig {
  std::string source;  // csv | dictionary | planar_atoms | plant
  std::filesystem::path path;
  Index count = 8;
  Distribution distribution = Distribution::gaussian(0.0, 1.0);
};

struct DimsConfig {
  Index past = 0;
  Index horizon = 1;
  std::optional<Index> order;
  Windowing windowing = Windowing::hankel_sliding;
};

struct GridAxis {
  double lower = -1.0;
  double upper = 1.0;
  Index points = 21;
};

struct RunConfig {
  std::string experiment;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  DataConfig data;
  DimsConfig dims;
  std::optional<Plant> plant;
  std::optional<ExcitationSpec> excitation;
  HullMethod hull = HullMethod::lp_test;
  nlohmann::json ocp;  // checked against the data matrix once it is built
  std::optional<Box> param_box;
  Index probe_count = 200;
  std::vector<double> eta{0.5, 2.0};
  std::optional<double> lambda_compare;
  std::vector<double> lambda_sweep;
  std::optional<Vector> xi;
  bool compare_full = false;
  Matrix gauge_w;  // columns
  Index gauge_random = 0;
  Index steps = 10;
  std::optional<Vector> initial_state;
  std::optional<Matrix> past_inputs;
  GridAxis grid_x0, grid_u;
  ToleranceConfig tol;
};

/// Parses and schema-checks a config document. Relative paths resolve
/// against `base_dir`. Throws Error{parse}.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Full command line, returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpc::cli
