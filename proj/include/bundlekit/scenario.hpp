#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bundlekit/grid.hpp"
#include "bundlekit/report.hpp"

namespace bundlekit {

/// Everything a scenario run depends on; parsed from a JSON config file (see
/// schemas/config.schema.json) with optional command-line overrides.
struct ScenarioConfig {
  ModelKind kind = ModelKind::FlatTorus;
  int dimension = 1;
  std::vector<double> extents;
  std::vector<int> grid_sizes;

  double epsilon = 0.0;

  int fiber_dim = 2;
  int rank = 1;
  std::optional<int> blocks;  // expected partition size, validated when given

  std::string bundle_generator = "trivial";      // trivial | gauge_fourier
  std::string projector_generator = "constant";  // constant | rotating_rank1 |
                                                 // rotating_rank2 | winding
  int winding = 2;
  double rotation_amplitude = 0.1;
  std::optional<std::uint64_t> seed;

  int quadrature_nodes = 200;
  double radius_candidate = 2.0;
  double radius_inflation = 10.0;  // used by the negative-control suite only

  std::vector<std::string> suites;  // empty = all
  std::map<std::string, double> tolerance_overrides;

  nlohmann::json echo;  // the normalized configuration, embedded in reports
};

ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);

/// Canonical suite order; selection is validated against this list.
const std::vector<std::string>& all_suites();

struct RunResult {
  int exit_code = 0;  // 0 all checks pass, 1 some check failed
  CheckReport report;
};

/// Executes the selected suites in canonical order with everything derived
/// deterministically from the config (same config + seed => byte-identical
/// report).  Throws std::invalid_argument on config inconsistencies.
RunResult run_scenario(const ScenarioConfig& config, bool collect_timings = false);

}  // namespace bundlekit
