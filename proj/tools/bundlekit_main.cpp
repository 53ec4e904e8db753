#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bundlekit/report.hpp"
#include "bundlekit/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bundlekit: bounded-geometry Hilbert bundle check suites"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "run a scenario and write its report");
  std::string config_path;
  std::vector<std::string> suites;
  std::string report_path;
  std::string tables_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int grid = 0;
  int quad_nodes = 0;
  bool timings = false;
  run->add_option("--config", config_path, "scenario configuration (JSON)")->required();
  run->add_option("--suite", suites, "suite selection (repeatable; default: config)");
  run->add_option("--report", report_path, "report output path (default: stdout)");
  run->add_option("--tables", tables_dir, "directory for CSV profile tables");
  run->add_option("--seed", seed, "override the generator seed")->each([&](const std::string&) {
    seed_set = true;
  });
  run->add_option("--grid", grid, "override every axis of the grid");
  run->add_option("--quad-nodes", quad_nodes, "override the quadrature node count");
  run->add_flag("--timings", timings,
                "include wall times in the report (breaks byte-for-byte determinism)");

  CLI11_PARSE(app, argc, argv);

  try {
    bundlekit::ScenarioConfig config = bundlekit::load_config(config_path);
    if (!suites.empty()) config.suites = suites;
    if (seed_set) config.seed = seed;
    if (grid > 0)
      for (int& n : config.grid_sizes) n = grid;
    if (quad_nodes > 0) config.quadrature_nodes = quad_nodes;
    // Re-normalize the echo after overrides.
    config = bundlekit::parse_config([&config] {
      nlohmann::json j = config.echo;
      j["manifold"]["grid_sizes"] = config.grid_sizes;
      j["quadrature_nodes"] = config.quadrature_nodes;
      if (config.seed) j["generators"]["seed"] = *config.seed;
      if (!config.suites.empty()) j["suites"] = config.suites;
      return j;
    }());

    const bundlekit::RunResult result = bundlekit::run_scenario(config, timings);

    const std::string text = result.report.to_string(timings);
    if (report_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(report_path, std::ios::binary);
      if (!out) {
        std::cerr << "cannot write report to " << report_path << "\n";
        return 2;
      }
      out << text;
    }
    if (!tables_dir.empty()) bundlekit::write_tables_csv(result.report, tables_dir);

    for (const bundlekit::Check& c : result.report.checks)
      std::cerr << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " (measured " << c.measured
                << ", bound " << c.bound << " + " << c.tolerance << ")\n";
    return result.exit_code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
