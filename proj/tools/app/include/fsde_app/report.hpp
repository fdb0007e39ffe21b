#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsde/estimate.hpp"
#include "fsde/harness.hpp"
#include "fsde/verify.hpp"

namespace fsde::app {

inline constexpr const char* kReportSchema = "fsde-report/1";

struct CsvTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

/// Shortest representation that parses back to the same double.
std::string format_number(double v);
std::string format_number(std::size_t v);

void write_csv(std::ostream& out, const CsvTable& table);

nlohmann::json to_json(const Estimate& e);
nlohmann::json to_json(const AssumptionReport& r);
nlohmann::json to_json(const InequalityReport& r);
nlohmann::json to_json(const GridSpec& g);

/// Plot data with columns parameter, lhs, rhs_shape, fitted_c, lhs_std_err.
CsvTable sweep_table(const std::string& name, const InequalityReport& r);

/// NaN and infinities become null in JSON; keep them distinguishable.
nlohmann::json finite_or_string(double v);

}  // namespace fsde::app
