#pragma once

// CSV ingestion and model construction from the run configuration.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "adjwald/beta.hpp"
#include "adjwald/glm/model.hpp"
#include "config.hpp"

namespace cli {

using adjwald::Index;
using adjwald::Matrix;
using adjwald::Vector;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<long> lines;  // source line of each row

  Index column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) fail(ErrorKind::ConfigError, "column '" + name + "' is not in the data");
    return static_cast<Index>(it - columns.begin());
  }
  Index n_rows() const { return static_cast<Index>(rows.size()); }
};

/// Comma-separated, header required, '.' decimal point, no quoting.
inline Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::DataError, "cannot open data file '" + path + "'");
  Table t;
  std::string line;
  long lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(trim(cell));
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(trim(cell));
    if (header) {
      t.columns = cells;
      for (const auto& c : cells)
        if (c.empty()) fail(ErrorKind::DataError, path + ": empty column name in header");
      header = false;
      continue;
    }
    const std::string where = path + ": row " + std::to_string(t.rows.size() + 1) + " (line " + std::to_string(lineno) + ")";
    if (cells.size() != t.columns.size())
      fail(ErrorKind::DataError, where + " has " + std::to_string(cells.size()) + " fields, expected " +
                                     std::to_string(t.columns.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = to_double(cells[c]);
      if (!v || !std::isfinite(*v))
        fail(ErrorKind::DataError, where + ", column '" + t.columns[c] + "': '" + cells[c] + "' is not a finite number");
      row.push_back(*v);
    }
    t.rows.push_back(std::move(row));
    t.lines.push_back(lineno);
  }
  if (header) fail(ErrorKind::DataError, path + ": missing header row");
  if (t.rows.empty()) fail(ErrorKind::DataError, path + ": no data rows");
  return t;
}

/// Rows of `t` whose `group` column equals each distinct value, in
/// increasing order of the value.
inline std::vector<std::pair<double, Table>> split_groups(const Table& t, const std::string& group) {
  const Index g = t.column(group);
  std::map<double, Table> parts;
  for (Index r = 0; r < t.n_rows(); ++r) {
    Table& part = parts[t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(g)]];
    part.columns = t.columns;
    part.rows.push_back(t.rows[static_cast<std::size_t>(r)]);
    part.lines.push_back(t.lines[static_cast<std::size_t>(r)]);
  }
  return {parts.begin(), parts.end()};
}

/// Design matrix from a term list. A term is a product of factors joined
/// by ':'; a factor is a column, log(column) or column=value (indicator).
struct Design {
  Matrix X;
  std::vector<std::string> names;
};

inline Vector factor_values(const Table& t, const std::string& factor) {
  Vector v(t.n_rows());
  if (factor.size() > 5 && factor.rfind("log(", 0) == 0 && factor.back() == ')') {
    const std::string col = trim(factor.substr(4, factor.size() - 5));
    const Index c = t.column(col);
    for (Index r = 0; r < t.n_rows(); ++r) {
      const double x = t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (!(x > 0.0))
        fail(ErrorKind::DataError, "row " + std::to_string(r + 1) + " (line " +
                                       std::to_string(t.lines[static_cast<std::size_t>(r)]) + "): log of non-positive '" +
                                       col + "'");
      v(r) = std::log(x);
    }
    return v;
  }
  if (const auto eq = factor.find('='); eq != std::string::npos) {
    const Index c = t.column(trim(factor.substr(0, eq)));
    const auto level = to_double(factor.substr(eq + 1));
    if (!level) fail(ErrorKind::ConfigError, "indicator '" + factor + "' needs a numeric level");
    for (Index r = 0; r < t.n_rows(); ++r)
      v(r) = t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == *level ? 1.0 : 0.0;
    return v;
  }
  const Index c = t.column(factor);
  for (Index r = 0; r < t.n_rows(); ++r) v(r) = t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return v;
}

inline Design build_design(const Table& t, const std::string& formula, bool intercept) {
  std::vector<Vector> cols;
  Design d;
  if (intercept) {
    cols.push_back(Vector::Ones(t.n_rows()));
    d.names.push_back("(Intercept)");
  }
  for (const auto& term : split_list(formula)) {
    Vector v = Vector::Ones(t.n_rows());
    for (const auto& factor : split_list(term, ':')) v = v.cwiseProduct(factor_values(t, factor));
    cols.push_back(std::move(v));
    d.names.push_back(term);
  }
  if (cols.empty()) fail(ErrorKind::ConfigError, "empty model: no intercept and no terms");
  d.X.resize(t.n_rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) d.X.col(static_cast<Index>(c)) = cols[c];
  return d;
}

inline Vector column_values(const Table& t, const std::string& name) {
  const Index c = t.column(name);
  Vector v(t.n_rows());
  for (Index r = 0; r < t.n_rows(); ++r) v(r) = t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return v;
}

/// Reports the first response value outside the family support by row.
inline void check_responses(const Table& t, const Vector& y, const adjwald::glm::FamilyLink& fl) {
  for (Index r = 0; r < y.size(); ++r) {
    try {
      fl.check_response(y(r));
    } catch (const adjwald::Error& e) {
      fail(ErrorKind::DataError, "row " + std::to_string(r + 1) + " (line " +
                                     std::to_string(t.lines[static_cast<std::size_t>(r)]) + "): " + e.what());
    }
  }
}

inline adjwald::glm::GlmModel build_glm(const Config& cfg, const Table& t) {
  adjwald::glm::GlmSpec s;
  s.family = adjwald::glm::FamilyLink::parse(cfg.str("model.family"));
  Design d = build_design(t, cfg.str("model.formula"), cfg.boolean("model.intercept"));
  s.X = std::move(d.X);
  s.coef_names = std::move(d.names);
  s.y = column_values(t, cfg.required("model.response"));
  check_responses(t, s.y, s.family);
  if (cfg.has("model.weights")) s.weights = column_values(t, cfg.str("model.weights"));
  if (cfg.has("model.offset")) s.offset = column_values(t, cfg.str("model.offset"));
  if (cfg.has("model.dispersion")) {
    const double phi = cfg.real("model.dispersion");
    if (!(phi > 0.0)) fail(ErrorKind::ConfigError, "dispersion must be positive");
    s.dispersion = phi;
  }
  return adjwald::glm::GlmModel(std::move(s));
}

inline adjwald::beta::BetaModel build_beta(const Config& cfg, const Table& t) {
  adjwald::beta::BetaSpec s;
  const bool intercept = cfg.boolean("model.intercept");
  Design mean = build_design(t, cfg.str("model.mean_formula"), intercept);
  Design prec = build_design(t, cfg.str("model.precision_formula"), intercept);
  s.X = std::move(mean.X);
  s.Z = std::move(prec.X);
  s.mean_names = std::move(mean.names);
  for (auto& n : prec.names) s.precision_names.push_back("(phi)_" + n);
  s.y = column_values(t, cfg.required("model.response"));
  for (Index r = 0; r < s.y.size(); ++r)
    if (!(s.y(r) > 0.0 && s.y(r) < 1.0))
      fail(ErrorKind::DataError, "row " + std::to_string(r + 1) + " (line " +
                                     std::to_string(t.lines[static_cast<std::size_t>(r)]) +
                                     "): beta response must lie strictly inside (0, 1)");
  return adjwald::beta::BetaModel(std::move(s));
}

}  // namespace cli
