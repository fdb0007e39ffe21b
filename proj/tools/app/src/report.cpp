#include "fsde_app/report.hpp"

#include <charconv>
#include <cmath>

namespace fsde::app {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_number(std::size_t v) { return std::to_string(v); }

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const bool quote = row[i].find_first_of(",\"\n") != std::string::npos;
      out << (i ? "," : "");
      if (!quote) {
        out << row[i];
        continue;
      }
      out << '"';
      for (char c : row[i]) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    }
    out << '\n';
  }
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

json to_json(const Estimate& e) {
  return {{"mean", finite_or_string(e.mean)},
          {"std_err", finite_or_string(e.std_err)},
          {"n", e.n},
          {"n_rejected", e.n_rejected}};
}

json to_json(const GridSpec& g) {
  return {{"lo", g.lo},
          {"hi", g.hi},
          {"step", g.step},
          {"n_segments", g.n_segments},
          {"segment_knots", g.segment_knots},
          {"segment_nodes", g.segment_nodes},
          {"segment_seed", g.segment_seed}};
}

json to_json(const AssumptionReport& r) {
  json violations = json::array();
  for (const Violation& v : r.violations) {
    violations.push_back({{"point", v.point}, {"margin", finite_or_string(v.margin)}});
  }
  json info = json::object();
  for (const auto& [k, v] : r.info) info[k] = finite_or_string(v);
  return {{"assumption", r.assumption},
          {"grid", to_json(r.grid)},
          {"evidence", r.evidence},
          {"points", r.points},
          {"violation_count", r.violation_count},
          {"violations", violations},
          {"worst_margin", finite_or_string(r.worst_margin)},
          {"worst_point", r.worst_point},
          {"passed", r.passed},
          {"info", info}};
}

json to_json(const InequalityReport& r) {
  json checks = json::object();
  for (const auto& [k, v] : r.checks) checks[k] = v;
  json info = json::object();
  for (const auto& [k, v] : r.info) info[k] = finite_or_string(v);
  json sweep = json::array();
  for (const SweepRow& row : r.sweep) {
    json extra = json::object();
    for (const auto& [k, v] : row.extra) extra[k] = finite_or_string(v);
    sweep.push_back({{"parameter", row.parameter},
                     {"lhs", to_json(row.lhs)},
                     {"rhs_shape", finite_or_string(row.rhs_shape)},
                     {"fitted_c", finite_or_string(row.fitted_c)},
                     {"extra", extra}});
  }
  return {{"name", r.name},
          {"lhs", to_json(r.lhs)},
          {"rhs_shape", finite_or_string(r.rhs_shape_value)},
          {"fitted_c", finite_or_string(r.fitted_c)},
          {"passed_structural", r.passed_structural},
          {"checks", checks},
          {"info", info},
          {"sweep_parameter", r.sweep_parameter},
          {"sweep", sweep}};
}

CsvTable sweep_table(const std::string& name, const InequalityReport& r) {
  CsvTable t{name, {"parameter", "lhs", "rhs_shape", "fitted_c", "lhs_std_err"}, {}};
  for (const SweepRow& row : r.sweep) {
    t.add({format_number(row.parameter), format_number(row.lhs.mean),
           format_number(row.rhs_shape), format_number(row.fitted_c),
           format_number(row.lhs.std_err)});
  }
  return t;
}

}  // namespace fsde::app
