#pragma once

// Run configuration: an INI file with sections, overridden key by key by
// command-line flags. Every key has one flag; both are listed by --help.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adjwald/error.hpp"

namespace cli {

using adjwald::ErrorKind;
using adjwald::fail;

struct KeySpec {
  const char* key;   // section.name in the config file
  const char* flag;  // long command-line flag
  const char* fallback;
  const char* help;
};

// clang-format off
inline const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
    {"model.type", "--model", "glm", "glm | beta | exponential | bernoulli"},
    {"model.data", "--data", "", "CSV file with a header row"},
    {"model.family", "--family", "gaussian-identity", "GLM family-link: binomial-logit, binomial-probit, poisson-log, gamma-log, gaussian-identity"},
    {"model.response", "--response", "", "response column"},
    {"model.formula", "--formula", "", "GLM terms, comma separated; a term is factors joined by ':'; a factor is col, log(col) or col=value"},
    {"model.mean_formula", "--mean-formula", "", "beta regression mean terms"},
    {"model.precision_formula", "--precision-formula", "", "beta regression precision terms"},
    {"model.intercept", "--intercept", "true", "add an intercept to each linear predictor"},
    {"model.weights", "--weights", "", "GLM prior weight column (binomial totals)"},
    {"model.offset", "--offset", "", "GLM offset column"},
    {"model.dispersion", "--dispersion", "", "known GLM dispersion (estimated when empty)"},
    {"model.group", "--group", "", "batch mode: fit each value of this column separately"},
    {"model.n", "--n", "", "sample size for the exponential and bernoulli models"},
    {"model.theta", "--theta", "0", "true parameter for the exponential and bernoulli generators"},
    {"inference.parameters", "--parameters", "", "interest parameters by name or 1-based index (default all)"},
    {"inference.psi0", "--psi0", "0", "null values, one per parameter or a single value"},
    {"inference.statistics", "--statistics", "", "t, t_pearson, t_star, t_tilde, t_tilde_star, r, t_2star, t_tilde_2star"},
    {"inference.levels", "--levels", "0.95", "confidence levels"},
    {"inference.interval", "--interval", "normal", "normal | studentized | both"},
    {"inference.alternative", "--alternative", "two-sided", "two-sided | less | greater"},
    {"inference.derivatives", "--derivatives", "auto", "auto | analytic | numeric"},
    {"inference.bias", "--bias", "closed-form", "closed-form | simulation"},
    {"inference.bias_replicates", "--bias-replicates", "500", "replicates for the simulated bias"},
    {"inference.grid_points", "--grid-points", "20", "points in the inversion grid"},
    {"inference.grid_half_width", "--grid-half-width", "5", "half-width of the inversion grid in standard errors"},
    {"inference.grid_widenings", "--grid-widenings", "3", "maximum automatic grid widenings"},
    {"fit.estimators", "--estimators", "ml,rb", "estimators reported by fit: ml, rb"},
    {"bootstrap.replicates", "--bootstrap-replicates", "500", "bootstrap size B"},
    {"simulate.replicates", "--replicates", "5000", "simulation replicates"},
    {"simulate.target", "--target", "coverage", "coverage | rejection | pvalue"},
    {"simulate.levels", "--sim-levels", "", "coverage levels, nominal sizes or p-value thresholds"},
    {"simulate.truth", "--truth", "", "true parameters (default: ML fit to the data)"},
    {"simulate.mode", "--mode", "simulate", "simulate | exact (bernoulli only)"},
    {"proportion.k", "--k", "", "number of successes"},
    {"proportion.method", "--method", "la-wald", "la-wald | agresti-coull | both"},
    {"proportion.coverage_points", "--coverage-points", "0", "points of the exact coverage curve over (0.01, 0.99); 0 disables"},
    {"run.seed", "--seed", "1", "random seed"},
    {"run.threads", "--threads", "1", "worker threads (capped by ADJWALD_THREADS)"},
    {"output.format", "--format", "csv", "csv | json"},
    {"output.path", "--output", "", "output file (default standard output)"},
    {"output.timing", "--timing", "false", "add wall-clock timing columns"},
  };
  return specs;
}
// clang-format on

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::optional<double> to_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

class Config {
 public:
  Config() {
    for (const auto& k : key_specs()) values_[k.key] = k.fallback;
  }

  void load_file(const std::string& path) {
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorKind::ConfigError, e.what());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) fail(ErrorKind::ConfigError, path + ": key '" + section + "' must be inside a section");
      for (const auto& [name, value] : body) {
        const std::string key = section + "." + name;
        if (!values_.count(key)) fail(ErrorKind::ConfigError, path + ": unknown key '" + key + "'");
        values_[key] = trim(value.data());
      }
    }
  }

  void set(const std::string& key, const std::string& value) { values_.at(key) = trim(value); }

  std::string str(const std::string& key) const { return values_.at(key); }
  bool has(const std::string& key) const { return !values_.at(key).empty(); }

  std::string required(const std::string& key) const {
    if (!has(key)) fail(ErrorKind::ConfigError, "missing required key '" + key + "' (" + flag_for(key) + ")");
    return str(key);
  }

  double real(const std::string& key) const {
    const auto v = to_double(str(key));
    if (!v) fail(ErrorKind::ConfigError, "key '" + key + "' needs a number, got '" + str(key) + "'");
    return *v;
  }

  long integer(const std::string& key) const {
    const double v = real(key);
    if (v != static_cast<double>(static_cast<long>(v)))
      fail(ErrorKind::ConfigError, "key '" + key + "' needs an integer, got '" + str(key) + "'");
    return static_cast<long>(v);
  }

  std::uint64_t seed(const std::string& key) const {
    const std::string t = str(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size())
      fail(ErrorKind::ConfigError, "key '" + key + "' needs a non-negative integer, got '" + t + "'");
    return v;
  }

  bool boolean(const std::string& key) const {
    const std::string v = str(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorKind::ConfigError, "key '" + key + "' needs true or false, got '" + v + "'");
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(str(key))) {
      const auto v = to_double(item);
      if (!v) fail(ErrorKind::ConfigError, "key '" + key + "' has a non-numeric entry '" + item + "'");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<std::string> list(const std::string& key) const { return split_list(str(key)); }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed) const {
    const std::string v = str(key);
    for (const auto& a : allowed)
      if (v == a) return v;
    std::string msg = "key '" + key + "' must be one of";
    for (const auto& a : allowed) msg += " " + a;
    fail(ErrorKind::ConfigError, msg + ", got '" + v + "'");
  }

  static std::string flag_for(const std::string& key) {
    for (const auto& k : key_specs())
      if (key == k.key) return k.flag;
    return key;
  }

 private:
  std::map<std::string, std::string> values_;
};

/// Text appended to --help describing the file format and every key.
inline std::string config_help() {
  std::ostringstream os;
  os << "Configuration file (--config FILE): INI sections with key = value lines.\n"
        "Command-line flags override file keys; file keys override defaults.\n\n";
  std::string section;
  for (const auto& k : key_specs()) {
    const std::string key = k.key;
    const std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      section = sec;
      os << "[" << section << "]\n";
    }
    std::string line = "  " + key.substr(key.find('.') + 1);
    line.resize(22, ' ');
    line += std::string(k.flag);
    line.resize(46, ' ');
    os << line << k.help;
    if (*k.fallback) os << " (default " << k.fallback << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace cli
