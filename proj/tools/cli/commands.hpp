#pragma once

// Subcommand implementations. Each builds a Report; main() writes it.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adjwald/adjwald.hpp"
#include "config.hpp"
#include "data.hpp"
#include "output.hpp"

namespace cli {

namespace aw = adjwald;
using aw::EstimatorKind;
using aw::FitResult;
using aw::inference::StatisticFamily;
using aw::simstudy::Statistic;

using AnyModel = std::variant<aw::glm::GlmModel, aw::beta::BetaModel>;

struct GroupModel {
  std::optional<double> group;  // set in batch mode
  AnyModel model;
};

inline AnyModel build_model(const Config& cfg, const Table& t) {
  const std::string type = cfg.choice("model.type", {"glm", "beta", "exponential", "bernoulli"});
  if (type == "glm") return build_glm(cfg, t);
  if (type == "beta") return build_beta(cfg, t);
  fail(ErrorKind::ConfigError, "model type '" + type + "' takes no data; it is only available in simulate");
}

inline std::vector<GroupModel> load_models(const Config& cfg) {
  const Table data = read_csv(cfg.required("model.data"));
  std::vector<GroupModel> out;
  if (!cfg.has("model.group")) {
    out.push_back({std::nullopt, build_model(cfg, data)});
    return out;
  }
  for (auto& [value, part] : split_groups(data, cfg.str("model.group"))) {
    try {
      out.push_back({value, build_model(cfg, part)});
    } catch (const aw::Error& e) {
      fail(e.kind(), "group " + format_number(value) + ": " + e.what());
    }
  }
  return out;
}

template <class M>
std::vector<std::string> names_of(const M& m) {
  return m.parameter_names();
}

inline std::vector<aw::Index> resolve_parameters(const Config& cfg, const std::vector<std::string>& names) {
  std::vector<aw::Index> out;
  const auto items = cfg.list("inference.parameters");
  if (items.empty()) {
    for (std::size_t j = 0; j < names.size(); ++j) out.push_back(static_cast<aw::Index>(j));
    return out;
  }
  for (const auto& item : items) {
    const auto it = std::find(names.begin(), names.end(), item);
    if (it != names.end()) {
      out.push_back(static_cast<aw::Index>(it - names.begin()));
      continue;
    }
    const auto v = to_double(item);
    if (v && *v >= 1 && *v <= static_cast<double>(names.size()) && *v == std::floor(*v)) {
      out.push_back(static_cast<aw::Index>(*v) - 1);
      continue;
    }
    fail(ErrorKind::ConfigError, "unknown parameter '" + item + "'");
  }
  return out;
}

inline std::vector<double> resolve_psi0(const Config& cfg, std::size_t count) {
  std::vector<double> v = cfg.reals("inference.psi0");
  if (v.size() == 1) v.assign(count, v[0]);
  if (v.size() != count)
    fail(ErrorKind::ConfigError, "psi0 needs one value or one per parameter (" + std::to_string(count) + ")");
  return v;
}

inline aw::WaldOptions wald_options(const Config& cfg) {
  aw::WaldOptions o;
  const std::string p = cfg.choice("inference.derivatives", {"auto", "analytic", "numeric"});
  o.path = p == "analytic" ? aw::DerivativePath::Analytic
           : p == "numeric" ? aw::DerivativePath::Numeric
                            : aw::DerivativePath::Automatic;
  return o;
}

inline aw::inference::Alternative alternative(const Config& cfg) {
  const std::string a = cfg.choice("inference.alternative", {"two-sided", "less", "greater"});
  return a == "less" ? aw::inference::Alternative::Less
         : a == "greater" ? aw::inference::Alternative::Greater
                          : aw::inference::Alternative::TwoSided;
}

inline std::vector<Statistic> statistics(const Config& cfg, const char* fallback) {
  std::vector<std::string> items = cfg.list("inference.statistics");
  if (items.empty()) items = split_list(fallback);
  std::vector<Statistic> out;
  for (const auto& s : items) out.push_back(aw::simstudy::parse_statistic(s));
  return out;
}

inline std::vector<double> levels(const Config& cfg, const std::string& key) {
  const std::vector<double> v = cfg.reals(key);
  for (double l : v)
    if (!(l > 0.0 && l < 1.0)) fail(ErrorKind::ConfigError, "levels must lie in (0, 1), got " + format_number(l));
  return v;
}

inline int threads(const Config& cfg) {
  const long t = cfg.integer("run.threads");
  if (t < 1) fail(ErrorKind::ConfigError, "threads must be >= 1");
  return static_cast<int>(t);
}

inline int bootstrap_size(const Config& cfg) { return static_cast<int>(cfg.integer("bootstrap.replicates")); }

inline std::vector<Value> with_group(const GroupModel& g, std::vector<Value> row) {
  if (g.group) row.insert(row.begin(), *g.group);
  return row;
}

inline std::vector<std::string> group_columns(bool grouped, std::vector<std::string> cols) {
  if (grouped) cols.insert(cols.begin(), "group");
  return cols;
}

/// Fit once, keeping the error message when the fit throws.
struct MaybeFit {
  std::optional<FitResult> fit;
  std::string error;
};

template <class M>
MaybeFit try_fit(const M& m, EstimatorKind kind) {
  MaybeFit out;
  try {
    out.fit = m.fit(kind);
    if (!out.fit->converged && !out.fit->any_diverged()) out.error = "DidNotConverge";
  } catch (const aw::Error& e) {
    out.error = e.what();
  }
  return out;
}

// ------------------------------------------------------------------ fit

inline Report run_fit(const Config& cfg) {
  const auto models = load_models(cfg);
  const bool grouped = cfg.has("model.group");
  std::vector<EstimatorKind> kinds;
  for (const auto& e : cfg.list("fit.estimators")) {
    if (e == "ml") kinds.push_back(EstimatorKind::ML);
    else if (e == "rb") kinds.push_back(EstimatorKind::RB);
    else fail(ErrorKind::ConfigError, "unknown estimator '" + e + "' (expected ml or rb)");
  }
  if (kinds.empty()) fail(ErrorKind::ConfigError, "no estimators requested");

  Report r;
  r.command = "fit";
  auto& est = r.table("estimates", group_columns(grouped, {"estimator", "parameter", "estimate", "se", "diverged"}));
  auto& sum = r.table("summary", group_columns(grouped, {"estimator", "loglik", "converged", "iterations", "score_norm",
                                                         "separation", "dispersion_ml", "dispersion_pearson", "error"}));
  std::vector<Report> parts(models.size());
  aw::parallel_for(models.size(), aw::resolve_threads(threads(cfg)), [&](std::size_t g) {
    std::visit(
        [&](const auto& m) {
          auto& pe = parts[g].table("e", {});
          auto& ps = parts[g].table("s", {});
          const auto names = names_of(m);
          for (EstimatorKind kind : kinds) {
            const MaybeFit mf = try_fit(m, kind);
            Value sep = std::monostate{}, phi_ml = std::monostate{}, phi_p = std::monostate{};
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, aw::glm::GlmModel>) {
              if (m.family().family == aw::glm::Family::Binomial)
                sep = std::string(aw::glm::to_string(m.separation().kind));
              if (mf.fit && m.estimates_dispersion() && kind == EstimatorKind::ML && !mf.fit->any_diverged()) {
                const aw::Vector beta = m.beta_of(mf.fit->theta);
                phi_ml = m.ml_dispersion(beta);
                phi_p = m.pearson_dispersion(beta);
              }
            }
            if (!mf.fit) {
              ps.add(with_group(models[g], {std::string(aw::to_string(kind)), std::monostate{}, false, 0L,
                                            std::monostate{}, sep, phi_ml, phi_p, mf.error}));
              continue;
            }
            const FitResult& f = *mf.fit;
            std::optional<aw::Matrix> inv;
            if (!f.any_diverged()) {
              try {
                inv = aw::numkit::inverse_spd(m.info(f.theta));
              } catch (const aw::Error&) {
              }
            }
            for (std::size_t j = 0; j < names.size(); ++j) {
              const auto jj = static_cast<aw::Index>(j);
              Value se = std::monostate{};
              if (inv) se = std::sqrt((*inv)(jj, jj));
              pe.add(with_group(models[g], {std::string(aw::to_string(kind)), names[j], f.theta(jj), se,
                                            f.is_diverged(jj)}));
            }
            ps.add(with_group(models[g], {std::string(aw::to_string(kind)), f.loglik, f.converged,
                                          static_cast<long>(f.iterations), f.score_norm, sep, phi_ml, phi_p,
                                          mf.error.empty() ? Value{std::monostate{}} : Value{mf.error}}));
          }
        },
        models[g].model);
  });
  for (auto& p : parts) {
    for (auto& row : p.tables[0].rows) est.add(std::move(row));
    for (auto& row : p.tables[1].rows) sum.add(std::move(row));
  }
  return r;
}

// ----------------------------------------------------------------- wald

namespace detail {

struct Cell {
  double value = std::nan("");
  std::string flag;
  double seconds = 0.0;
};

template <class M>
aw::LocationAdjustment adjustment(const Config& cfg, const M& m, const FitResult& f, aw::Index j) {
  const aw::WaldOptions opt = wald_options(cfg);
  if (f.kind == EstimatorKind::ML && cfg.choice("inference.bias", {"closed-form", "simulation"}) == "simulation") {
    const aw::WithSimulatedBias<M> sim(m, static_cast<int>(cfg.integer("inference.bias_replicates")),
                                       cfg.seed("run.seed"));
    return aw::location_adjustment(sim, f.theta, f.kind, j, opt);
  }
  return aw::location_adjustment(m, f.theta, f.kind, j, opt);
}

template <class M>
double statistic_value(const Config& cfg, const M& m, const FitResult& f, aw::Index j, double psi0, Statistic s) {
  switch (s) {
    case Statistic::T:
    case Statistic::TTilde: return aw::wald_statistic(m, f, j, psi0);
    case Statistic::TStar:
    case Statistic::TTildeStar: return adjustment(cfg, m, f, j).adjusted(psi0);
    case Statistic::TScaled:
    case Statistic::TTildeScaled: {
      aw::inference::BootstrapPlan plan;
      plan.replicates = bootstrap_size(cfg);
      plan.seed = cfg.seed("run.seed");
      plan.family = s == Statistic::TScaled ? StatisticFamily::TStar : StatisticFamily::TTildeStar;
      plan.purpose = aw::inference::BootstrapPurpose::Variance;
      return aw::inference::scale_adjusted_statistic(m, f, j, psi0, plan, wald_options(cfg)).scaled;
    }
    case Statistic::TPearson:
    case Statistic::SignedRoot:
      if constexpr (std::is_same_v<M, aw::glm::GlmModel>) {
        if (s == Statistic::TPearson) return aw::glm::wald_with_dispersion(m, f, j, psi0, aw::glm::DispersionPlugin::Pearson);
        return aw::glm::signed_lr_root(m, f, j, psi0);
      } else {
        fail(ErrorKind::InvalidModel, std::string(aw::simstudy::to_string(s)) + " is only available for GLMs");
      }
  }
  return std::nan("");
}

template <class M>
double standard_error(const M& m, const FitResult& f, aw::Index j, Statistic s) {
  if constexpr (std::is_same_v<M, aw::glm::GlmModel>) {
    if (s == Statistic::TPearson) return aw::glm::se_with_dispersion(m, f, j, aw::glm::DispersionPlugin::Pearson);
  }
  return aw::kappa(m, f.theta, j);
}

}  // namespace detail

inline Report run_wald(const Config& cfg) {
  const auto models = load_models(cfg);
  const bool grouped = cfg.has("model.group");
  const bool timing = cfg.boolean("output.timing");
  const auto stats = statistics(cfg, "t,t_star,t_tilde,t_tilde_star");
  const auto alt = alternative(cfg);
  wald_options(cfg);
  cfg.choice("inference.bias", {"closed-form", "simulation"});

  Report r;
  r.command = "wald";
  r.meta.emplace_back("alternative", std::string(aw::inference::to_string(alt)));
  r.meta.emplace_back("bias", cfg.str("inference.bias"));
  std::vector<std::string> cols = group_columns(
      grouped, {"parameter", "psi0", "statistic", "value", "p_value", "estimate", "se", "flag"});
  if (timing) cols.push_back("seconds");
  auto& out = r.table("wald", cols);

  for (const auto& gm : models) {
    std::visit(
        [&](const auto& m) {
          const auto names = names_of(m);
          const auto params = resolve_parameters(cfg, names);
          const auto psi0 = resolve_psi0(cfg, params.size());
          bool want_ml = false, want_rb = false;
          for (Statistic s : stats) (aw::simstudy::needs_rb(s) ? want_rb : want_ml) = true;
          const MaybeFit ml = want_ml ? try_fit(m, EstimatorKind::ML) : MaybeFit{};
          const MaybeFit rb = want_rb ? try_fit(m, EstimatorKind::RB) : MaybeFit{};

          const std::size_t S = stats.size();
          std::vector<detail::Cell> cells(params.size() * S);
          std::vector<double> ses(params.size() * S, std::nan(""));
          aw::parallel_for(params.size(), aw::resolve_threads(threads(cfg)), [&](std::size_t p) {
            const aw::Index j = params[p];
            for (std::size_t s = 0; s < S; ++s) {
              const auto start = std::chrono::steady_clock::now();
              detail::Cell& c = cells[p * S + s];
              const MaybeFit& mf = aw::simstudy::needs_rb(stats[s]) ? rb : ml;
              if (!mf.fit || !mf.error.empty()) {
                c.flag = mf.error;
              } else if (mf.fit->is_diverged(j)) {
                c.value = 0.0;
                c.flag = "DivergedEstimate";
              } else {
                try {
                  c.value = detail::statistic_value(cfg, m, *mf.fit, j, psi0[p], stats[s]);
                  ses[p * S + s] = detail::standard_error(m, *mf.fit, j, stats[s]);
                } catch (const aw::Error& e) {
                  c.flag = e.what();
                }
              }
              c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
          });
          for (std::size_t p = 0; p < params.size(); ++p) {
            for (std::size_t s = 0; s < S; ++s) {
              const detail::Cell& c = cells[p * S + s];
              const MaybeFit& mf = aw::simstudy::needs_rb(stats[s]) ? rb : ml;
              Value estimate = std::monostate{};
              if (mf.fit) estimate = mf.fit->theta(params[p]);
              Value pv = std::monostate{};
              if (!std::isnan(c.value)) pv = aw::inference::p_value(c.value, alt);
              std::vector<Value> row = with_group(
                  gm, {names[static_cast<std::size_t>(params[p])], psi0[p], std::string(aw::simstudy::to_string(stats[s])),
                       std::isnan(c.value) ? Value{std::monostate{}} : Value{c.value}, pv, estimate,
                       std::isnan(ses[p * S + s]) ? Value{std::monostate{}} : Value{ses[p * S + s]},
                       c.flag.empty() ? Value{std::monostate{}} : Value{c.flag}});
              if (timing) row.push_back(c.seconds);
              out.add(std::move(row));
            }
          }
        },
        gm.model);
  }
  return r;
}

// ------------------------------------------------------------------- ci

inline std::optional<StatisticFamily> invertible(Statistic s) {
  switch (s) {
    case Statistic::T: return StatisticFamily::T;
    case Statistic::TStar: return StatisticFamily::TStar;
    case Statistic::TTilde: return StatisticFamily::TTilde;
    case Statistic::TTildeStar: return StatisticFamily::TTildeStar;
    default: return std::nullopt;
  }
}

inline Report run_ci(const Config& cfg) {
  const auto models = load_models(cfg);
  const bool grouped = cfg.has("model.group");
  const auto stats = statistics(cfg, "t,t_star,t_tilde,t_tilde_star");
  const auto lv = levels(cfg, "inference.levels");
  if (lv.empty()) fail(ErrorKind::ConfigError, "no confidence levels given");
  const std::string interval = cfg.choice("inference.interval", {"normal", "studentized", "both"});
  aw::inference::GridSpec grid;
  grid.points = static_cast<int>(cfg.integer("inference.grid_points"));
  grid.half_width_se = cfg.real("inference.grid_half_width");
  grid.max_widenings = static_cast<int>(cfg.integer("inference.grid_widenings"));
  if (grid.points < 2 || !(grid.half_width_se > 0.0) || grid.max_widenings < 0)
    fail(ErrorKind::ConfigError, "grid needs >= 2 points, a positive half-width and >= 0 widenings");
  const aw::WaldOptions opt = wald_options(cfg);

  Report r;
  r.command = "ci";
  r.meta.emplace_back("interval", interval);
  if (interval != "normal") {
    r.meta.emplace_back("bootstrap_replicates", static_cast<long>(bootstrap_size(cfg)));
    r.meta.emplace_back("seed", static_cast<long>(cfg.seed("run.seed")));
  }
  auto& out = r.table("intervals", group_columns(grouped, {"parameter", "statistic", "level", "method", "lower", "upper",
                                                          "estimate", "grid_min", "grid_max", "grid_points",
                                                          "crossings", "widenings", "multiple_crossings",
                                                          "bootstrap_failures", "flag"}));
  std::vector<std::string> methods;
  if (interval != "studentized") methods.push_back("normal-quantile");
  if (interval != "normal") methods.push_back("studentized-bootstrap");

  for (const auto& gm : models) {
    std::visit(
        [&](const auto& m) {
          const auto names = names_of(m);
          const auto params = resolve_parameters(cfg, names);
          bool want_ml = false, want_rb = false;
          for (Statistic s : stats) (aw::simstudy::needs_rb(s) ? want_rb : want_ml) = true;
          const MaybeFit ml = want_ml ? try_fit(m, EstimatorKind::ML) : MaybeFit{};
          const MaybeFit rb = want_rb ? try_fit(m, EstimatorKind::RB) : MaybeFit{};

          const std::size_t S = stats.size(), L = lv.size(), K = methods.size();
          std::vector<std::vector<Value>> rows(params.size() * S * L * K);
          aw::parallel_for(params.size() * S, aw::resolve_threads(threads(cfg)), [&](std::size_t ps) {
            const std::size_t p = ps / S, s = ps % S;
            const aw::Index j = params[p];
            const std::string name = names[static_cast<std::size_t>(j)];
            const std::string stat = aw::simstudy::to_string(stats[s]);
            const MaybeFit& mf = aw::simstudy::needs_rb(stats[s]) ? rb : ml;
            auto blank = [&](std::size_t l, std::size_t k, const std::string& flag) {
              std::vector<Value> row = {name, stat, lv[l], methods[k]};
              for (int c = 0; c < 9; ++c) row.emplace_back(std::monostate{});
              row.emplace_back(std::monostate{});
              row.emplace_back(flag);
              if (mf.fit) row[6] = mf.fit->theta(j);
              return row;
            };
            const auto family = invertible(stats[s]);
            std::string common;
            if (!family) common = std::string(stat) + " is not inverted into intervals";
            else if (!mf.fit || !mf.error.empty()) common = mf.error;
            else if (mf.fit->is_diverged(j)) common = "DivergedEstimate";
            std::optional<std::pair<std::function<double(double)>, double>> fn;
            if (common.empty()) {
              try {
                fn = aw::inference::statistic_function(m, *mf.fit, j, *family, opt);
              } catch (const aw::Error& e) {
                common = e.what();
              }
            }
            std::optional<aw::inference::BootstrapSample> sample;
            std::string boot_error;
            for (std::size_t k = 0; k < K; ++k) {
              if (common.empty() && methods[k] == "studentized-bootstrap" && !sample && boot_error.empty()) {
                try {
                  aw::inference::BootstrapPlan plan;
                  plan.replicates = bootstrap_size(cfg);
                  plan.seed = cfg.seed("run.seed");
                  plan.family = *family;
                  plan.purpose = aw::inference::BootstrapPurpose::Quantiles;
                  plan.validate();
                  sample = aw::inference::bootstrap_statistic(m, *mf.fit, j, plan, opt);
                } catch (const aw::Error& e) {
                  boot_error = e.what();
                }
              }
              for (std::size_t l = 0; l < L; ++l) {
                auto& slot = rows[((p * S + s) * L + l) * K + k];
                if (!common.empty()) {
                  slot = blank(l, k, common);
                  continue;
                }
                if (methods[k] == "studentized-bootstrap" && !sample) {
                  slot = blank(l, k, boot_error);
                  continue;
                }
                double lo_q, hi_q;
                auto method = aw::inference::IntervalMethod::NormalQuantile;
                if (methods[k] == "normal-quantile") {
                  hi_q = aw::numkit::normal_quantile(0.5 + 0.5 * lv[l]);
                  lo_q = -hi_q;
                } else {
                  lo_q = aw::inference::empirical_quantile(sample->values, (1.0 - lv[l]) / 2.0);
                  hi_q = aw::inference::empirical_quantile(sample->values, 1.0 - (1.0 - lv[l]) / 2.0);
                  method = aw::inference::IntervalMethod::StudentizedBootstrap;
                }
                try {
                  const auto ci = aw::inference::invert_statistic(fn->first, mf.fit->theta(j), fn->second, lo_q, hi_q,
                                                                  lv[l], grid, method);
                  slot = {name, stat, lv[l], methods[k], ci.lower, ci.upper, mf.fit->theta(j), ci.grid_min,
                          ci.grid_max, static_cast<long>(ci.grid_points), static_cast<long>(ci.crossings_found),
                          static_cast<long>(ci.widenings), ci.multiple_crossings,
                          sample && methods[k] != "normal-quantile" ? Value{static_cast<long>(sample->failures)}
                                                                     : Value{std::monostate{}},
                          ci.multiple_crossings ? Value{std::string("MultipleCrossings")} : Value{std::monostate{}}};
                } catch (const aw::Error& e) {
                  slot = blank(l, k, e.what());
                }
              }
            }
          });
          for (auto& row : rows) out.add(with_group(gm, std::move(row)));
        },
        gm.model);
  }
  return r;
}

// ------------------------------------------------------------- simulate

inline std::vector<double> default_sim_levels(aw::simstudy::Target t) {
  switch (t) {
    case aw::simstudy::Target::Coverage: return {0.9, 0.95, 0.99};
    case aw::simstudy::Target::Rejection: return {0.001, 0.01, 0.025, 0.05};
    case aw::simstudy::Target::PValue: {
      std::vector<double> g;
      for (int i = 1; i <= 100; ++i) g.push_back(i / 100.0);
      return g;
    }
  }
  return {};
}

inline Report summarize_study(const Config& cfg, const aw::simstudy::StudyData& d,
                              const std::vector<std::string>& names, const aw::Vector& truth) {
  const auto target = aw::simstudy::parse_target(cfg.str("simulate.target"));
  std::vector<double> lv = cfg.has("simulate.levels") ? levels(cfg, "simulate.levels") : default_sim_levels(target);
  const auto alt = alternative(cfg);
  Report r;
  r.command = "simulate";
  r.meta.emplace_back("target", std::string(aw::simstudy::to_string(target)));
  r.meta.emplace_back("mode", std::string(d.exact ? "exact" : "simulate"));
  r.meta.emplace_back("alternative", std::string(aw::inference::to_string(alt)));
  r.meta.emplace_back("seed", static_cast<long>(cfg.seed("run.seed")));
  r.meta.emplace_back("requested", static_cast<long>(d.requested()));
  r.meta.emplace_back("successes", static_cast<long>(d.requested() - d.failures()));
  r.meta.emplace_back("failures", static_cast<long>(d.failures()));
  r.meta.emplace_back("diverged", static_cast<long>(d.divergences()));

  auto& tr = r.table("truth", {"parameter", "value"});
  for (aw::Index j = 0; j < truth.size(); ++j) tr.add({names[static_cast<std::size_t>(j)], truth(j)});

  std::vector<aw::simstudy::Cell> cells;
  if (target == aw::simstudy::Target::Coverage) cells = aw::simstudy::coverage(d, lv);
  else if (target == aw::simstudy::Target::Rejection) cells = aw::simstudy::rejection(d, lv, alt);
  else cells = aw::simstudy::pvalue_distribution(d, lv, alt);
  auto& st = r.table("summary", {"statistic", "parameter", "level", "estimate", "mc_se", "used"});
  for (const auto& c : cells)
    st.add({std::string(aw::simstudy::to_string(c.statistic)), names[static_cast<std::size_t>(c.parameter)], c.level,
            c.estimate, c.mc_se, static_cast<long>(c.used)});
  auto& mo = r.table("moments", {"statistic", "parameter", "mean", "mean_se", "sd", "used"});
  for (const auto& m : aw::simstudy::moments(d))
    mo.add({std::string(aw::simstudy::to_string(m.statistic)), names[static_cast<std::size_t>(m.parameter)], m.mean,
            m.mean_se, m.sd, static_cast<long>(m.used)});
  return r;
}

inline aw::simstudy::StudySpec study_spec(const Config& cfg, const std::vector<std::string>& names) {
  aw::simstudy::StudySpec spec;
  spec.replicates = static_cast<int>(cfg.integer("simulate.replicates"));
  spec.seed = cfg.seed("run.seed");
  spec.parameters = resolve_parameters(cfg, names);
  spec.statistics = statistics(cfg, "t,t_star,t_tilde,t_tilde_star");
  spec.bootstrap_replicates = bootstrap_size(cfg);
  spec.threads = threads(cfg);
  spec.wald = wald_options(cfg);
  return spec;
}

inline Report run_simulate(const Config& cfg) {
  aw::simstudy::parse_target(cfg.str("simulate.target"));
  const std::string type = cfg.choice("model.type", {"glm", "beta", "exponential", "bernoulli"});
  const std::string mode = cfg.choice("simulate.mode", {"simulate", "exact"});
  if (mode == "exact" && type != "bernoulli") fail(ErrorKind::ConfigError, "exact mode is only available for bernoulli");

  if (type == "exponential" || type == "bernoulli") {
    const long n = cfg.integer("model.n");
    if (n < 1) fail(ErrorKind::ConfigError, "model.n must be >= 1");
    const double theta = cfg.real("model.theta");
    const aw::Vector truth = aw::Vector::Constant(1, theta);
    const std::vector<std::string> names = {type == "bernoulli" ? "log_odds" : "log_rate"};
    auto spec = study_spec(cfg, names);
    if (mode == "exact") {
      return summarize_study(cfg, aw::simstudy::exact_bernoulli_study(n, theta, spec.statistics), names, truth);
    }
    if (type == "bernoulli") {
      const aw::oneparam::BernoulliLogOddsModel gen({n, 0});
      return summarize_study(cfg, aw::simstudy::run_study(gen, truth, spec), names, truth);
    }
    const aw::oneparam::ExponentialRateModel gen({n, 1.0});
    return summarize_study(cfg, aw::simstudy::run_study(gen, truth, spec), names, truth);
  }

  if (cfg.has("model.group")) fail(ErrorKind::ConfigError, "batch mode is not available in simulate");
  const auto models = load_models(cfg);
  return std::visit(
      [&](const auto& m) {
        const auto names = names_of(m);
        aw::Vector truth;
        if (cfg.has("simulate.truth")) {
          const auto v = cfg.reals("simulate.truth");
          truth = Eigen::Map<const aw::Vector>(v.data(), static_cast<aw::Index>(v.size()));
          if (truth.size() != m.dim())
            fail(ErrorKind::ConfigError, "simulate.truth needs " + std::to_string(m.dim()) + " values");
        } else {
          const FitResult f = m.fit(EstimatorKind::ML);
          if (!f.converged || f.any_diverged())
            fail(ErrorKind::DidNotConverge, "the ML fit used as generator did not converge");
          truth = f.theta;
        }
        return summarize_study(cfg, aw::simstudy::run_study(m, truth, study_spec(cfg, names)), names, truth);
      },
      models.front().model);
}

// ----------------------------------------------------------- proportion

inline Report run_proportion(const Config& cfg) {
  const long n = cfg.integer("model.n");
  const long k = cfg.integer("proportion.k");
  const aw::oneparam::BernoulliSample sample{n, k};
  sample.validate();
  const auto lv = levels(cfg, "inference.levels");
  const std::string method = cfg.choice("proportion.method", {"la-wald", "agresti-coull", "both"});
  const long points = cfg.integer("proportion.coverage_points");
  if (points != 0 && points < 2) fail(ErrorKind::ConfigError, "coverage_points must be 0 or >= 2");

  std::vector<std::pair<std::string, aw::oneparam::ProportionMethod>> methods;
  if (method != "agresti-coull") methods.emplace_back("la-wald", aw::oneparam::ProportionMethod::LaWald);
  if (method != "la-wald") methods.emplace_back("agresti-coull", aw::oneparam::ProportionMethod::AgrestiCoull);

  Report r;
  r.command = "proportion";
  r.meta.emplace_back("n", n);
  r.meta.emplace_back("k", k);
  auto& iv = r.table("intervals", {"method", "level", "lower", "upper"});
  for (const auto& [name, mth] : methods)
    for (double l : lv) {
      const auto ci = mth == aw::oneparam::ProportionMethod::LaWald ? aw::oneparam::proportion_ci(sample, l)
                                                                   : aw::oneparam::agresti_coull_ci(sample, l);
      iv.add({name, l, ci.lower, ci.upper});
    }
  if (points > 0) {
    const auto grid = aw::oneparam::uniform_grid(0.01, 0.99, static_cast<int>(points));
    auto& cv = r.table("coverage", {"method", "level", "p", "coverage", "expected_length"});
    for (const auto& [name, mth] : methods)
      for (double l : lv) {
        const auto by_k = aw::oneparam::proportion_intervals_all_k(n, l, mth);
        for (const auto& c : aw::oneparam::exact_coverage(n, by_k, grid))
          cv.add({name, l, c.p, c.coverage, c.expected_length});
      }
  }
  return r;
}

}  // namespace cli
