#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace bundlekit {

/// One measured quantity against its bound.  A check passes when
/// measured <= bound + tolerance, so equality checks report the residual as
/// "measured" against bound 0.
struct Check {
  std::string name;
  std::string statement;  // the inequality or identity being verified
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  double wall_ms = -1.0;  // filled only when timing collection is on
};

Check make_check(std::string name, std::string statement, double measured, double bound,
                 double tolerance);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct CheckReport {
  std::string version = "0.1.0";
  nlohmann::json scenario;  // echo of the configuration that produced this
  std::vector<Check> checks;
  std::map<std::string, Table> tables;

  void append(Check c) { checks.push_back(std::move(c)); }
  void merge(const CheckReport& other);
  bool all_pass() const;
  const Check* find(const std::string& name) const;

  nlohmann::json to_json(bool with_timings = false) const;
  std::string to_string(bool with_timings = false) const;
};

/// One CSV file per table, a single header line each.  Tables with no rows
/// still produce the header.
void write_tables_csv(const CheckReport& report, const std::filesystem::path& dir);

}  // namespace bundlekit
