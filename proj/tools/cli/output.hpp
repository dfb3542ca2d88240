#pragma once

// Report tables written as CSV or JSON. Numbers are printed with a fixed
// format so identical runs produce identical bytes.

#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace cli {

inline constexpr int kSchemaVersion = 1;

using Value = std::variant<std::monostate, double, long, bool, std::string>;

struct ReportTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  void add(std::vector<Value> row) { rows.push_back(std::move(row)); }
};

struct Report {
  std::string command;
  std::vector<std::pair<std::string, Value>> meta;
  std::deque<ReportTable> tables;  // deque keeps references from table() valid

  ReportTable& table(std::string name, std::vector<std::string> columns) {
    tables.push_back({std::move(name), std::move(columns), {}});
    return tables.back();
  }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_cell(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, double>) return format_number(x);
        else if constexpr (std::is_same_v<T, long>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else {
          if (x.find_first_of(",\"\n") == std::string::npos) return x;
          std::string q = "\"";
          for (char c : x) q += c == '"' ? std::string("\"\"") : std::string(1, c);
          return q + "\"";
        }
      },
      v);
}

inline nlohmann::ordered_json json_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(x)) return nullptr;
          return x;
        } else return x;
      },
      v);
}

/// CSV: metadata as '# key=value' lines, then each table with its header.
/// Tables after the first are introduced by a '# table=name' line.
inline void write_csv(std::ostream& os, const Report& r) {
  os << "# schema_version=" << kSchemaVersion << "\n# command=" << r.command << "\n";
  for (const auto& [k, v] : r.meta) os << "# " << k << "=" << csv_cell(v) << "\n";
  for (std::size_t t = 0; t < r.tables.size(); ++t) {
    const auto& tab = r.tables[t];
    if (t > 0) os << "\n";
    os << "# table=" << tab.name << "\n";
    for (std::size_t c = 0; c < tab.columns.size(); ++c) os << (c ? "," : "") << tab.columns[c];
    os << "\n";
    for (const auto& row : tab.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_cell(row[c]);
      os << "\n";
    }
  }
}

inline void write_json(std::ostream& os, const Report& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = r.command;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.meta) meta[k] = json_value(v);
  j["meta"] = meta;
  nlohmann::ordered_json tables = nlohmann::ordered_json::object();
  for (const auto& tab : r.tables) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : tab.rows) {
      nlohmann::ordered_json o = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c < row.size(); ++c) o[tab.columns[c]] = json_value(row[c]);
      rows.push_back(std::move(o));
    }
    tables[tab.name] = std::move(rows);
  }
  j["tables"] = tables;
  os << j.dump(2) << "\n";
}

}  // namespace cli
