#include "bundlekit/report.hpp"

#include <fstream>

namespace bundlekit {

Check make_check(std::string name, std::string statement, double measured, double bound,
                 double tolerance) {
  Check c;
  c.name = std::move(name);
  c.statement = std::move(statement);
  c.measured = measured;
  c.bound = bound;
  c.tolerance = tolerance;
  c.pass = measured <= bound + tolerance;
  return c;
}

void CheckReport::merge(const CheckReport& other) {
  for (const Check& c : other.checks) checks.push_back(c);
  for (const auto& [name, table] : other.tables) tables[name] = table;
}

bool CheckReport::all_pass() const {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

const Check* CheckReport::find(const std::string& name) const {
  for (const Check& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

nlohmann::json CheckReport::to_json(bool with_timings) const {
  nlohmann::json j;
  j["version"] = version;
  j["scenario"] = scenario.is_null() ? nlohmann::json::object() : scenario;
  j["overall_pass"] = all_pass();
  nlohmann::json arr = nlohmann::json::array();
  for (const Check& c : checks) {
    nlohmann::json jc;
    jc["name"] = c.name;
    jc["statement"] = c.statement;
    jc["measured"] = c.measured;
    jc["bound"] = c.bound;
    jc["tolerance"] = c.tolerance;
    jc["pass"] = c.pass;
    if (with_timings) jc["wall_ms"] = c.wall_ms;
    arr.push_back(std::move(jc));
  }
  j["checks"] = std::move(arr);
  nlohmann::json jt = nlohmann::json::object();
  for (const auto& [name, table] : tables) {
    jt[name] = {{"header", table.header}, {"rows", table.rows}};
  }
  j["tables"] = std::move(jt);
  return j;
}

std::string CheckReport::to_string(bool with_timings) const {
  return to_json(with_timings).dump(2) + "\n";
}

void write_tables_csv(const CheckReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, table] : report.tables) {
    std::ofstream out(dir / (name + ".csv"));
    for (std::size_t i = 0; i < table.header.size(); ++i) {
      if (i) out << ',';
      out << table.header[i];
    }
    out << '\n';
    out.precision(17);
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << row[i];
      }
      out << '\n';
    }
  }
}

}  // namespace bundlekit
