#pragma once

// p-values, confidence intervals by grid inversion of (location-adjusted)
// Wald statistics, studentized bootstrap intervals, and the bootstrap
// location-and-scale-adjusted statistic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/numkit/special.hpp"
#include "adjwald/parallel.hpp"
#include "adjwald/wald.hpp"

namespace adjwald::inference {

enum class Alternative { TwoSided, Less, Greater };

inline const char* to_string(Alternative a) {
  switch (a) {
    case Alternative::TwoSided: return "two-sided";
    case Alternative::Less: return "less";
    case Alternative::Greater: return "greater";
  }
  return "?";
}

/// t, t*: statistics at the ML fit. t~, t~*: at the reduced-bias fit.
enum class StatisticFamily { T, TStar, TTilde, TTildeStar };

inline const char* to_string(StatisticFamily f) {
  switch (f) {
    case StatisticFamily::T: return "t";
    case StatisticFamily::TStar: return "t_star";
    case StatisticFamily::TTilde: return "t_tilde";
    case StatisticFamily::TTildeStar: return "t_tilde_star";
  }
  return "?";
}

inline EstimatorKind estimator_for(StatisticFamily f) {
  return (f == StatisticFamily::T || f == StatisticFamily::TStar) ? EstimatorKind::ML : EstimatorKind::RB;
}

inline bool is_adjusted(StatisticFamily f) {
  return f == StatisticFamily::TStar || f == StatisticFamily::TTildeStar;
}

inline double p_value(double statistic, Alternative alt = Alternative::TwoSided) {
  if (!std::isfinite(statistic)) fail(ErrorKind::DomainError, "p_value requires a finite statistic");
  switch (alt) {
    case Alternative::TwoSided: return std::min(1.0, 2.0 * numkit::normal_sf(std::fabs(statistic)));
    case Alternative::Less: return numkit::normal_cdf(statistic);
    case Alternative::Greater: return numkit::normal_sf(statistic);
  }
  return 1.0;
}

/// p-value against a bootstrap reference distribution, (r + 1) / (B + 1).
inline double p_value(double statistic, const std::vector<double>& replicates, Alternative alt) {
  if (!std::isfinite(statistic)) fail(ErrorKind::DomainError, "p_value requires a finite statistic");
  if (replicates.empty()) fail(ErrorKind::DomainError, "empty bootstrap reference");
  const double denom = static_cast<double>(replicates.size()) + 1.0;
  const auto le = static_cast<double>(std::count_if(replicates.begin(), replicates.end(), [&](double v) { return v <= statistic; }));
  const auto ge = static_cast<double>(std::count_if(replicates.begin(), replicates.end(), [&](double v) { return v >= statistic; }));
  switch (alt) {
    case Alternative::Less: return (le + 1.0) / denom;
    case Alternative::Greater: return (ge + 1.0) / denom;
    case Alternative::TwoSided: return std::min(1.0, 2.0 * std::min(le + 1.0, ge + 1.0) / denom);
  }
  return 1.0;
}

/// Empirical quantile with plotting position (B + 1) p, linear between order
/// statistics and clamped to the extremes.
inline double empirical_quantile(std::vector<double> values, double prob) {
  if (values.empty()) fail(ErrorKind::DomainError, "empirical_quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) + 1.0) * prob;
  if (h <= 1.0) return values.front();
  if (h >= static_cast<double>(values.size())) return values.back();
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

enum class IntervalMethod { NormalQuantile, StudentizedBootstrap };

inline const char* to_string(IntervalMethod m) {
  return m == IntervalMethod::NormalQuantile ? "normal-quantile" : "studentized-bootstrap";
}

struct IntervalEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  IntervalMethod method = IntervalMethod::NormalQuantile;
  double grid_min = 0.0;
  double grid_max = 0.0;
  int grid_points = 0;
  int crossings_found = 0;
  int widenings = 0;
  // More than one crossing for a bound; the outermost pair was returned.
  bool multiple_crossings = false;
};

struct GridSpec {
  double half_width_se = 5.0;  // grid spans estimate +/- half_width_se * se
  int points = 20;
  int max_widenings = 3;  // half-width doubles on each widening
  // Explicit grid bounds; used instead of half_width_se when min < max.
  double min = 0.0;
  double max = 0.0;
};

namespace detail {

// psi values where stat(psi) - target changes sign, linearly interpolated.
inline std::vector<double> crossings(const std::vector<double>& grid, const std::vector<double>& values,
                              double target) {
  std::vector<double> out;
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    const double a = values[g] - target;
    const double b = values[g + 1] - target;
    if (a == 0.0) {
      out.push_back(grid[g]);
    } else if (a * b < 0.0) {
      out.push_back(grid[g] + (grid[g + 1] - grid[g]) * a / (a - b));
    }
  }
  if (!grid.empty() && values.back() - target == 0.0) out.push_back(grid.back());
  return out;
}

}  // namespace detail

/// Finds {psi : lower_q <= stat(psi) <= upper_q} for a statistic decreasing
/// in psi, by evaluating stat on an equispaced grid and interpolating.
template <class F>
IntervalEstimate invert_statistic(const F& stat, double center, double se, double lower_q, double upper_q,
                                  double level, const GridSpec& grid, IntervalMethod method) {
  if (!(grid.points >= 2)) fail(ErrorKind::DomainError, "grid needs at least 2 points");
  if (!(lower_q <= upper_q)) fail(ErrorKind::DomainError, "quantiles out of order");
  double lo = grid.min < grid.max ? grid.min : center - grid.half_width_se * se;
  double hi = grid.min < grid.max ? grid.max : center + grid.half_width_se * se;
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) fail(ErrorKind::DomainError, "invalid inversion grid");

  for (int widen = 0;; ++widen) {
    std::vector<double> psi(static_cast<std::size_t>(grid.points));
    std::vector<double> values(psi.size());
    for (int g = 0; g < grid.points; ++g) {
      psi[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (grid.points - 1);
      values[static_cast<std::size_t>(g)] = stat(psi[static_cast<std::size_t>(g)]);
      if (!std::isfinite(values[static_cast<std::size_t>(g)]))
        fail(ErrorKind::NonFiniteEvaluation, "statistic not finite on inversion grid");
    }
    const auto lower_cross = detail::crossings(psi, values, upper_q);
    const auto upper_cross = detail::crossings(psi, values, lower_q);
    if (!lower_cross.empty() && !upper_cross.empty()) {
      IntervalEstimate out;
      out.lower = *std::min_element(lower_cross.begin(), lower_cross.end());
      out.upper = *std::max_element(upper_cross.begin(), upper_cross.end());
      out.level = level;
      out.method = method;
      out.grid_min = lo;
      out.grid_max = hi;
      out.grid_points = grid.points;
      out.crossings_found = static_cast<int>(lower_cross.size() + upper_cross.size());
      out.multiple_crossings = lower_cross.size() > 1 || upper_cross.size() > 1;
      out.widenings = widen;
      if (out.lower > out.upper) std::swap(out.lower, out.upper);
      return out;
    }
    if (widen >= grid.max_widenings) {
      fail(ErrorKind::GridTooNarrow, "statistic does not cross the target quantiles on [" + std::to_string(lo) + ", " +
                                         std::to_string(hi) + "] after " + std::to_string(widen) + " widenings");
    }
    const double mid = 0.5 * (lo + hi);
    const double half = hi - lo;  // doubles the half-width
    lo = mid - half;
    hi = mid + half;
  }
}

/// Statistic as a function of the null value, for a fitted model.
template <InformationModel M>
auto statistic_function(const M& model, const FitResult& fit, Index j, StatisticFamily family,
                        const WaldOptions& options = {}) {
  if (fit.kind != estimator_for(family))
    fail(ErrorKind::DomainError, std::string("statistic ") + to_string(family) + " needs a " +
                                     to_string(estimator_for(family)) + " fit");
  if (fit.is_diverged(j)) fail(ErrorKind::InfiniteEstimate, "estimate for parameter " + std::to_string(j) + " is infinite");
  if (is_adjusted(family)) {
    LocationAdjustment la = location_adjustment(model, fit.theta, fit.kind, j, options);
    const double se = la.se();
    return std::pair{std::function<double(double)>([la = std::move(la)](double psi) { return la.adjusted(psi); }), se};
  }
  const double se = kappa(model, fit.theta, j);
  const double est = fit.theta(j);
  return std::pair{std::function<double(double)>([est, se](double psi) { return (est - psi) / se; }), se};
}

template <InformationModel M>
IntervalEstimate invert_ci(const M& model, const FitResult& fit, Index j, double level, StatisticFamily family,
                           const GridSpec& grid = {}, const WaldOptions& options = {}) {
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::DomainError, "level must be in (0, 1)");
  const auto [stat, se] = statistic_function(model, fit, j, family, options);
  const double z = numkit::normal_quantile(0.5 + 0.5 * level);
  return invert_statistic(stat, fit.theta(j), se, -z, z, level, grid, IntervalMethod::NormalQuantile);
}

enum class BootstrapPurpose { Quantiles, Variance };

struct BootstrapPlan {
  int replicates = 500;
  std::uint64_t seed = 1;
  StatisticFamily family = StatisticFamily::TStar;
  BootstrapPurpose purpose = BootstrapPurpose::Quantiles;
  int threads = 1;
  double max_failure_fraction = 0.05;

  void validate() const {
    const int minimum = purpose == BootstrapPurpose::Variance ? 50 : 199;
    if (replicates < minimum)
      fail(ErrorKind::DomainError, "bootstrap needs at least " + std::to_string(minimum) + " replicates for this purpose");
  }
};

struct BootstrapSample {
  std::vector<double> values;  // successful replicates, in replicate order
  int requested = 0;
  int failures = 0;
};

/// Parametric bootstrap of the chosen statistic for parameter j: data are
/// simulated at the fitted theta and the statistic is evaluated at the
/// fitted value of theta_j. Replicate b uses stream (plan.seed, b).
template <ResamplableModel M>
BootstrapSample bootstrap_statistic(const M& model, const FitResult& fit, Index j, const BootstrapPlan& plan,
                                    const WaldOptions& options = {}) {
  const EstimatorKind kind = estimator_for(plan.family);
  const double psi = fit.theta(j);
  const auto count = static_cast<std::size_t>(plan.replicates);
  std::vector<double> values(count, 0.0);
  std::vector<char> ok(count, 0);
  parallel_for(count, resolve_threads(plan.threads), [&](std::size_t b) {
    numkit::RngStream rng(plan.seed, b);
    try {
      const M sim = model.simulate(fit.theta, rng);
      const FitResult refit = sim.fit(kind);
      if (!refit.converged || refit.any_diverged()) return;
      double v;
      if (is_adjusted(plan.family)) {
        v = location_adjustment(sim, refit.theta, kind, j, options).adjusted(psi);
      } else {
        v = (refit.theta(j) - psi) / kappa(sim, refit.theta, j);
      }
      if (!std::isfinite(v)) return;
      values[b] = v;
      ok[b] = 1;
    } catch (const Error&) {
    }
  });
  BootstrapSample out;
  out.requested = plan.replicates;
  for (std::size_t b = 0; b < count; ++b) {
    if (ok[b]) out.values.push_back(values[b]);
    else ++out.failures;
  }
  if (out.failures > plan.max_failure_fraction * plan.replicates) {
    fail(ErrorKind::RefitFailures, std::to_string(out.failures) + " of " + std::to_string(plan.replicates) +
                                       " bootstrap refits failed");
  }
  return out;
}

struct StudentizedInterval {
  IntervalEstimate interval;
  double lower_quantile = 0.0;  // bootstrap alpha/2 quantile of the statistic
  double upper_quantile = 0.0;
  int failures = 0;
};

template <ResamplableModel M>
StudentizedInterval studentized_bootstrap_ci(const M& model, const FitResult& fit, Index j, double level,
                                             const BootstrapPlan& plan, const GridSpec& grid = {},
                                             const WaldOptions& options = {}) {
  if (plan.purpose != BootstrapPurpose::Quantiles) fail(ErrorKind::DomainError, "studentized intervals need a quantile plan");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::DomainError, "level must be in (0, 1)");
  plan.validate();
  const auto [stat, se] = statistic_function(model, fit, j, plan.family, options);
  const BootstrapSample sample = bootstrap_statistic(model, fit, j, plan, options);
  const double alpha = 1.0 - level;
  StudentizedInterval out;
  out.lower_quantile = empirical_quantile(sample.values, alpha / 2.0);
  out.upper_quantile = empirical_quantile(sample.values, 1.0 - alpha / 2.0);
  out.failures = sample.failures;
  out.interval = invert_statistic(stat, fit.theta(j), se, out.lower_quantile, out.upper_quantile, level, grid,
                                  IntervalMethod::StudentizedBootstrap);
  return out;
}

struct ScaleAdjusted {
  double statistic = 0.0;  // t* (or t~*) at psi0
  double bootstrap_sd = 0.0;
  double scaled = 0.0;     // t** = t* / bootstrap_sd
  int replicates_used = 0;
  int failures = 0;
};

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline ScaleAdjusted scale_adjust(double statistic, const BootstrapSample& sample) {
  ScaleAdjusted out;
  out.statistic = statistic;
  out.bootstrap_sd = sample_sd(sample.values);
  out.replicates_used = static_cast<int>(sample.values.size());
  out.failures = sample.failures;
  if (!(out.bootstrap_sd >= 1e-12)) fail(ErrorKind::ZeroVariance, "bootstrap standard deviation is zero");
  out.scaled = statistic / out.bootstrap_sd;
  return out;
}

/// t** = t* / sd(bootstrap t*) (or the reduced-bias analogue, per plan.family).
template <ResamplableModel M>
ScaleAdjusted scale_adjusted_statistic(const M& model, const FitResult& fit, Index j, double psi0,
                                       const BootstrapPlan& plan, const WaldOptions& options = {}) {
  if (plan.purpose != BootstrapPurpose::Variance) fail(ErrorKind::DomainError, "scale adjustment needs a variance plan");
  if (!is_adjusted(plan.family)) fail(ErrorKind::DomainError, "scale adjustment applies to t* or t~*");
  plan.validate();
  const auto [stat, se] = statistic_function(model, fit, j, plan.family, options);
  (void)se;
  return scale_adjust(stat(psi0), bootstrap_statistic(model, fit, j, plan, options));
}

}  // namespace adjwald::inference
