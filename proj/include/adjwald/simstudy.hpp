#pragma once

// Reproducible simulation studies: data are drawn from a generator model at
// fixed true parameters, every requested statistic is evaluated at the true
// value of each interest parameter, and the values are summarized as
// coverage, rejection rates or p-value distributions with Monte Carlo
// standard errors.
//
// The statistics used here are decreasing in the null value, so the
// inverted interval covers the truth exactly when the statistic evaluated
// at the truth lies between the two quantiles. Coverage is computed that
// way instead of by grid inversion.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/glm/model.hpp"
#include "adjwald/inference.hpp"
#include "adjwald/oneparam.hpp"
#include "adjwald/parallel.hpp"
#include "adjwald/wald.hpp"

namespace adjwald::simstudy {

enum class Statistic { T, TPearson, TStar, TTilde, TTildeStar, TScaled, TTildeScaled, SignedRoot };

inline const char* to_string(Statistic s) {
  switch (s) {
    case Statistic::T: return "t";
    case Statistic::TPearson: return "t_pearson";
    case Statistic::TStar: return "t_star";
    case Statistic::TTilde: return "t_tilde";
    case Statistic::TTildeStar: return "t_tilde_star";
    case Statistic::TScaled: return "t_2star";
    case Statistic::TTildeScaled: return "t_tilde_2star";
    case Statistic::SignedRoot: return "r";
  }
  return "?";
}

inline Statistic parse_statistic(const std::string& s) {
  for (Statistic v : {Statistic::T, Statistic::TPearson, Statistic::TStar, Statistic::TTilde, Statistic::TTildeStar,
                      Statistic::TScaled, Statistic::TTildeScaled, Statistic::SignedRoot})
    if (s == to_string(v)) return v;
  fail(ErrorKind::ConfigError, "unknown statistic '" + s +
                                   "' (expected t, t_pearson, t_star, t_tilde, t_tilde_star, t_2star, t_tilde_2star or r)");
}

inline bool needs_rb(Statistic s) {
  return s == Statistic::TTilde || s == Statistic::TTildeStar || s == Statistic::TTildeScaled;
}

enum class Target { Coverage, Rejection, PValue };

inline const char* to_string(Target t) {
  switch (t) {
    case Target::Coverage: return "coverage";
    case Target::Rejection: return "rejection";
    case Target::PValue: return "pvalue";
  }
  return "?";
}

inline Target parse_target(const std::string& s) {
  if (s == "coverage") return Target::Coverage;
  if (s == "rejection") return Target::Rejection;
  if (s == "pvalue") return Target::PValue;
  fail(ErrorKind::ConfigError, "unknown simulation target '" + s + "' (expected coverage, rejection or pvalue)");
}

struct StudySpec {
  int replicates = 5000;
  std::uint64_t seed = 1;
  std::vector<Index> parameters;     // empty means all
  std::vector<Statistic> statistics{Statistic::T, Statistic::TStar};
  int bootstrap_replicates = 500;    // for t** and t~**
  int threads = 1;
  double max_failure_fraction = 0.2;
  WaldOptions wald{};

  void validate() const {
    if (replicates < 100) fail(ErrorKind::ConfigError, "a simulation study needs at least 100 replicates");
    if (statistics.empty()) fail(ErrorKind::ConfigError, "no statistics requested");
  }
};

/// Statistic values per replicate, laid out as values[r][s * P + p] for
/// statistic s and interest parameter p. NaN marks a value that could not be
/// computed in a successful replicate.
struct StudyData {
  std::vector<Index> parameters;
  std::vector<Statistic> statistics;
  std::vector<std::vector<double>> values;
  std::vector<double> weights;  // 1 for simulated replicates, probabilities for enumeration
  std::vector<char> failed;
  std::vector<char> diverged;   // some ML estimate was infinite; t and t* set to 0
  bool exact = false;

  std::size_t cell(std::size_t s, std::size_t p) const { return s * parameters.size() + p; }
  int requested() const { return static_cast<int>(values.size()); }
  int failures() const {
    int f = 0;
    for (char c : failed) f += c ? 1 : 0;
    return f;
  }
  int divergences() const {
    int d = 0;
    for (std::size_t r = 0; r < diverged.size(); ++r) d += (!failed[r] && diverged[r]) ? 1 : 0;
    return d;
  }
};

namespace detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <ResamplableModel M>
double scaled(const M& sim, const FitResult& fit, Index j, double psi, inference::StatisticFamily family,
              const StudySpec& spec, std::uint64_t replicate) {
  inference::BootstrapPlan plan;
  plan.replicates = spec.bootstrap_replicates;
  plan.seed = numkit::derive_seed(spec.seed, replicate);
  plan.family = family;
  plan.purpose = inference::BootstrapPurpose::Variance;
  plan.threads = 1;
  return inference::scale_adjusted_statistic(sim, fit, j, psi, plan, spec.wald).scaled;
}

}  // namespace detail

/// Evaluates the requested statistics for one simulated dataset. Throws when
/// a required fit fails; diverged ML coordinates follow the zero convention.
template <ResamplableModel M>
std::vector<double> evaluate_replicate(const M& sim, const Vector& truth, const StudySpec& spec,
                                       const std::vector<Index>& params, std::uint64_t replicate, bool& diverged) {
  bool want_ml = false, want_rb = false;
  for (Statistic s : spec.statistics) (needs_rb(s) ? want_rb : want_ml) = true;
  FitResult ml, rb;
  diverged = false;
  if (want_ml) {
    ml = sim.fit(EstimatorKind::ML);
    diverged = ml.any_diverged();
    if (!ml.converged && !diverged) fail(ErrorKind::DidNotConverge, "ML refit did not converge");
  }
  if (want_rb) {
    rb = sim.fit(EstimatorKind::RB);
    if (!rb.converged) fail(ErrorKind::DidNotConverge, "RB refit did not converge");
  }
  std::vector<LocationAdjustment> la_ml, la_rb;
  std::vector<Index> finite;
  for (Index j : params)
    if (!ml.is_diverged(j)) finite.push_back(j);
  auto index_of = [&](Index j) {
    for (std::size_t c = 0; c < finite.size(); ++c)
      if (finite[c] == j) return c;
    return finite.size();
  };
  bool need_la_ml = false, need_la_rb = false;
  for (Statistic s : spec.statistics) {
    need_la_ml |= s == Statistic::TStar;
    need_la_rb |= s == Statistic::TTildeStar;
  }
  if (need_la_ml && !finite.empty()) la_ml = location_adjustments(sim, ml.theta, EstimatorKind::ML, finite, spec.wald);
  if (need_la_rb) la_rb = location_adjustments(sim, rb.theta, EstimatorKind::RB, params, spec.wald);

  const std::size_t P = params.size();
  std::vector<double> out(spec.statistics.size() * P, detail::kNaN);
  for (std::size_t s = 0; s < spec.statistics.size(); ++s) {
    for (std::size_t p = 0; p < P; ++p) {
      const Index j = params[p];
      const double psi = truth(j);
      const bool inf = ml.is_diverged(j);
      double v = detail::kNaN;
      switch (spec.statistics[s]) {
        case Statistic::T: v = inf ? 0.0 : wald_statistic(sim, ml, j, psi); break;
        case Statistic::TStar: v = inf ? 0.0 : la_ml[index_of(j)].adjusted(psi); break;
        case Statistic::TTilde: v = wald_statistic(sim, rb, j, psi); break;
        case Statistic::TTildeStar: v = la_rb[p].adjusted(psi); break;
        case Statistic::TPearson:
        case Statistic::SignedRoot:
          if constexpr (std::is_same_v<M, glm::GlmModel>) {
            // Dispersion plug-ins and the profile root are defined for
            // regression coefficients only; other cells stay NaN.
            if (j >= sim.n_coef()) v = detail::kNaN;
            else if (inf) v = 0.0;
            else if (spec.statistics[s] == Statistic::TPearson)
              v = glm::wald_with_dispersion(sim, ml, j, psi, glm::DispersionPlugin::Pearson);
            else
              v = glm::signed_lr_root(sim, ml, j, psi);
          } else {
            fail(ErrorKind::ConfigError, std::string(to_string(spec.statistics[s])) + " is only available for GLMs");
          }
          break;
        case Statistic::TScaled:
          v = inf ? 0.0 : detail::scaled(sim, ml, j, psi, inference::StatisticFamily::TStar, spec, replicate);
          break;
        case Statistic::TTildeScaled:
          v = detail::scaled(sim, rb, j, psi, inference::StatisticFamily::TTildeStar, spec, replicate);
          break;
      }
      out[s * P + p] = v;
    }
  }
  return out;
}

/// Runs the study with replicate r drawn from stream (spec.seed, r).
/// Results do not depend on the thread count.
template <ResamplableModel M>
StudyData run_study(const M& generator, const Vector& truth, const StudySpec& spec) {
  spec.validate();
  if (truth.size() != generator.dim()) fail(ErrorKind::ConfigError, "true parameter vector has the wrong length");
  StudyData data;
  data.statistics = spec.statistics;
  data.parameters = spec.parameters;
  if (data.parameters.empty())
    for (Index j = 0; j < generator.dim(); ++j) data.parameters.push_back(j);
  for (Index j : data.parameters)
    if (j < 0 || j >= generator.dim()) fail(ErrorKind::ConfigError, "parameter index out of range");

  const auto R = static_cast<std::size_t>(spec.replicates);
  data.values.assign(R, {});
  data.weights.assign(R, 1.0);
  data.failed.assign(R, 0);
  data.diverged.assign(R, 0);
  parallel_for(R, resolve_threads(spec.threads), [&](std::size_t r) {
    numkit::RngStream rng(spec.seed, r);
    try {
      const M sim = generator.simulate(truth, rng);
      bool div = false;
      data.values[r] = evaluate_replicate(sim, truth, spec, data.parameters, r, div);
      data.diverged[r] = div ? 1 : 0;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError) throw;
      data.failed[r] = 1;
      data.values[r].clear();
    }
  });
  if (data.failures() > spec.max_failure_fraction * spec.replicates) {
    fail(ErrorKind::RefitFailures, std::to_string(data.failures()) + " of " + std::to_string(spec.replicates) +
                                       " replicates failed; aborting the study");
  }
  return data;
}

/// Bernoulli study by exact enumeration over k = 0..n: the same summaries as
/// a simulation, with binomial probabilities as weights and no Monte Carlo
/// error.
inline StudyData exact_bernoulli_study(long n, double theta, const std::vector<Statistic>& statistics) {
  StudyData data;
  data.exact = true;
  data.parameters = {0};
  data.statistics = statistics;
  const std::vector<double> pmf = oneparam::binomial_pmf(n, 1.0 / (1.0 + std::exp(-theta)));
  for (long k = 0; k <= n; ++k) {
    const oneparam::Statistics st = oneparam::bernoulli_statistics({n, k}, theta);
    std::vector<double> row;
    for (Statistic s : statistics) {
      switch (s) {
        case Statistic::T: row.push_back(st.t); break;
        case Statistic::TStar: row.push_back(st.t_star); break;
        case Statistic::TTilde: row.push_back(st.t_tilde); break;
        case Statistic::TTildeStar: row.push_back(st.t_tilde_star); break;
        default: fail(ErrorKind::ConfigError, std::string("exact mode does not support ") + to_string(s));
      }
    }
    data.values.push_back(std::move(row));
    data.weights.push_back(pmf[static_cast<std::size_t>(k)]);
    data.failed.push_back(0);
    data.diverged.push_back(st.boundary ? 1 : 0);
  }
  return data;
}

// ------------------------------------------------------------ summaries

struct Cell {
  Statistic statistic = Statistic::T;
  Index parameter = 0;
  double level = 0.0;  // nominal coverage, nominal size or p-value threshold
  double estimate = 0.0;
  double mc_se = 0.0;
  int used = 0;
};

struct Moments {
  Statistic statistic = Statistic::T;
  Index parameter = 0;
  double mean = 0.0;
  double mean_se = 0.0;
  double sd = 0.0;
  int used = 0;
};

namespace detail {

template <class Pred>
Cell proportion(const StudyData& d, std::size_t s, std::size_t p, double level, Pred pred) {
  Cell c;
  c.statistic = d.statistics[s];
  c.parameter = d.parameters[p];
  c.level = level;
  double w = 0.0, hit = 0.0;
  for (std::size_t r = 0; r < d.values.size(); ++r) {
    if (d.failed[r]) continue;
    const double v = d.values[r][d.cell(s, p)];
    if (std::isnan(v)) continue;
    ++c.used;
    w += d.weights[r];
    if (pred(v)) hit += d.weights[r];
  }
  c.estimate = w > 0.0 ? hit / w : detail::kNaN;
  if (!d.exact && c.used > 0) c.mc_se = std::sqrt(c.estimate * (1.0 - c.estimate) / c.used);
  return c;
}

}  // namespace detail

/// Empirical coverage of the equal-tailed interval at each level.
inline std::vector<Cell> coverage(const StudyData& d, const std::vector<double>& levels) {
  std::vector<Cell> out;
  for (std::size_t s = 0; s < d.statistics.size(); ++s)
    for (std::size_t p = 0; p < d.parameters.size(); ++p)
      for (double level : levels) {
        const double z = numkit::normal_quantile(0.5 + 0.5 * level);
        out.push_back(detail::proportion(d, s, p, level, [z](double v) { return std::abs(v) <= z; }));
      }
  return out;
}

/// Rejection rates of the test of the true value at each nominal size.
inline std::vector<Cell> rejection(const StudyData& d, const std::vector<double>& levels, inference::Alternative alt) {
  std::vector<Cell> out;
  for (std::size_t s = 0; s < d.statistics.size(); ++s)
    for (std::size_t p = 0; p < d.parameters.size(); ++p)
      for (double level : levels)
        out.push_back(
            detail::proportion(d, s, p, level, [&](double v) { return inference::p_value(v, alt) < level; }));
  return out;
}

/// Empirical distribution function of the null p-values at each threshold.
inline std::vector<Cell> pvalue_distribution(const StudyData& d, const std::vector<double>& thresholds,
                                             inference::Alternative alt) {
  std::vector<Cell> out;
  for (std::size_t s = 0; s < d.statistics.size(); ++s)
    for (std::size_t p = 0; p < d.parameters.size(); ++p)
      for (double u : thresholds)
        out.push_back(detail::proportion(d, s, p, u, [&](double v) { return inference::p_value(v, alt) <= u; }));
  return out;
}

inline std::vector<Moments> moments(const StudyData& d) {
  std::vector<Moments> out;
  for (std::size_t s = 0; s < d.statistics.size(); ++s)
    for (std::size_t p = 0; p < d.parameters.size(); ++p) {
      Moments m;
      m.statistic = d.statistics[s];
      m.parameter = d.parameters[p];
      double w = 0.0, s1 = 0.0, s2 = 0.0;
      for (std::size_t r = 0; r < d.values.size(); ++r) {
        if (d.failed[r]) continue;
        const double v = d.values[r][d.cell(s, p)];
        if (std::isnan(v)) continue;
        ++m.used;
        w += d.weights[r];
        s1 += d.weights[r] * v;
        s2 += d.weights[r] * v * v;
      }
      if (w > 0.0) {
        m.mean = s1 / w;
        m.sd = std::sqrt(std::max(0.0, s2 / w - m.mean * m.mean));
        if (!d.exact && m.used > 1) m.mean_se = m.sd / std::sqrt(static_cast<double>(m.used));
      } else {
        m.mean = m.sd = detail::kNaN;
      }
      out.push_back(m);
    }
  return out;
}

/// Difference in coverage between statistics a and b for parameter p, with
/// its Monte Carlo standard error from the paired replicate indicators.
struct PairedDifference {
  double difference = 0.0;
  double mc_se = 0.0;
  int used = 0;
};

inline PairedDifference paired_coverage_difference(const StudyData& d, std::size_t a, std::size_t b, std::size_t p,
                                                   double level) {
  const double z = numkit::normal_quantile(0.5 + 0.5 * level);
  PairedDifference out;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t r = 0; r < d.values.size(); ++r) {
    if (d.failed[r]) continue;
    const double va = d.values[r][d.cell(a, p)], vb = d.values[r][d.cell(b, p)];
    if (std::isnan(va) || std::isnan(vb)) continue;
    const double diff = (std::abs(va) <= z ? 1.0 : 0.0) - (std::abs(vb) <= z ? 1.0 : 0.0);
    ++out.used;
    s1 += diff;
    s2 += diff * diff;
  }
  if (out.used > 1) {
    const double n = out.used;
    out.difference = s1 / n;
    out.mc_se = std::sqrt(std::max(0.0, (s2 / n - out.difference * out.difference) / (n - 1.0)));
  }
  return out;
}

}  // namespace adjwald::simstudy
