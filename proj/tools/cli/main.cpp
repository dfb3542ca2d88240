// adjwald: command-line front end.
// Exit codes: 0 ok, 2 model error, 3 data error, 4 config error.

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

int exit_code(adjwald::ErrorKind kind) {
  switch (kind) {
    case adjwald::ErrorKind::ConfigError: return 4;
    case adjwald::ErrorKind::DataError:
    case adjwald::ErrorKind::BoundaryResponse: return 3;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Location-adjusted Wald statistics for GLMs, beta regression and one-parameter models"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("\n" + cli::config_help());

  std::string config_path;
  app.add_option("--config", config_path, "INI configuration file");
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> options;
  for (const auto& k : cli::key_specs()) options[k.key] = app.add_option(k.flag, flags[k.key], k.help);

  const std::map<std::string, cli::Report (*)(const cli::Config&)> commands = {
      {"fit", cli::run_fit},
      {"wald", cli::run_wald},
      {"ci", cli::run_ci},
      {"simulate", cli::run_simulate},
      {"proportion", cli::run_proportion},
  };
  const std::map<std::string, std::string> descriptions = {
      {"fit", "fit the model and report estimates, standard errors and diagnostics"},
      {"wald", "Wald statistics and p-values per parameter and statistic family"},
      {"ci", "confidence intervals by inverting the statistics"},
      {"simulate", "coverage, rejection or p-value simulation study"},
      {"proportion", "interval for a binomial proportion, with optional exact coverage"},
  };
  for (const auto& [name, fn] : commands) app.add_subcommand(name, descriptions.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : 4;
  }

  try {
    cli::Config cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) cfg.set(key, flags[key]);

    std::string which;
    for (const auto* sub : app.get_subcommands()) which = sub->get_name();
    const cli::Report report = commands.at(which)(cfg);

    const std::string format = cfg.choice("output.format", {"csv", "json"});
    std::ofstream file;
    if (cfg.has("output.path")) {
      file.open(cfg.str("output.path"));
      if (!file) adjwald::fail(adjwald::ErrorKind::ConfigError, "cannot write '" + cfg.str("output.path") + "'");
    }
    std::ostream& os = cfg.has("output.path") ? file : std::cout;
    if (format == "json") cli::write_json(os, report);
    else cli::write_csv(os, report);
    return 0;
  } catch (const adjwald::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
