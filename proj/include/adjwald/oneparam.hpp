#pragma once

// One-parameter models with closed-form statistics: the Bernoulli log-odds
// model and the exponential model parameterized by its log rate. Both are
// also exposed as model adapters so the generic machinery applies to them.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/inference.hpp"
#include "adjwald/numkit/random.hpp"
#include "adjwald/numkit/special.hpp"
#include "adjwald/wald.hpp"

namespace adjwald::oneparam {

using inference::IntervalEstimate;

/// t, t*, t~, t~* for a scalar parameter.
struct Statistics {
  double t = 0.0;
  double t_star = 0.0;
  double t_tilde = 0.0;
  double t_tilde_star = 0.0;
  // The ML estimate is infinite and t = t* = 0 by convention.
  bool boundary = false;

  double get(inference::StatisticFamily f) const {
    switch (f) {
      case inference::StatisticFamily::T: return t;
      case inference::StatisticFamily::TStar: return t_star;
      case inference::StatisticFamily::TTilde: return t_tilde;
      case inference::StatisticFamily::TTildeStar: return t_tilde_star;
    }
    return 0.0;
  }
};

/// Wald statistic and its first-order bias for a scalar parameter with
/// information i and derivatives i1 = di/dtheta, i2 = d2i/dtheta2 at theta.
struct ScalarAdjustment {
  double t = 0.0;
  double bias = 0.0;
  double adjusted() const { return t - bias; }
};

inline ScalarAdjustment scalar_adjustment(double theta, double theta0, double i, double i1, double i2, double b,
                                          EstimatorKind kind) {
  const double kappa = 1.0 / std::sqrt(i);
  const double k1 = -0.5 * i1 * std::pow(i, -1.5);
  const double k2 = 0.75 * i1 * i1 * std::pow(i, -2.5) - 0.5 * i2 * std::pow(i, -1.5);
  const double T = (theta - theta0) / kappa;
  const double T1 = (1.0 - T * k1) / kappa;
  const double T2 = -(2.0 * k1 * T1 + T * k2) / kappa;
  ScalarAdjustment out;
  out.t = T;
  out.bias = T2 / (2.0 * i) + (kind == EstimatorKind::ML ? b * T1 : 0.0);
  return out;
}

// ---------------------------------------------------------------- Bernoulli

struct BernoulliSample {
  long n = 0;
  long successes = 0;

  void validate() const {
    if (n < 1) fail(ErrorKind::DomainError, "Bernoulli sample needs n >= 1");
    if (successes < 0 || successes > n)
      fail(ErrorKind::DomainError, "successes must lie in [0, n], got k=" + std::to_string(successes) +
                                       " with n=" + std::to_string(n));
  }
  double mean() const { return static_cast<double>(successes) / static_cast<double>(n); }
};

namespace detail {
inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }
}  // namespace detail

inline double bernoulli_info(long n, double theta) {
  const double mu = detail::expit(theta);
  return static_cast<double>(n) * mu * (1.0 - mu);
}

inline double bernoulli_bias(long n, double theta) {
  const double mu = detail::expit(theta);
  return -(1.0 - 2.0 * mu) / (2.0 * static_cast<double>(n) * mu * (1.0 - mu));
}

/// Haldane-Anscombe estimator, the reduced-bias estimator of the log-odds.
inline double bernoulli_rb_estimate(const BernoulliSample& s) {
  const double a = 0.5 / static_cast<double>(s.n);
  const double y = s.mean();
  return std::log((y + a) / (1.0 - y + a));
}

inline ScalarAdjustment bernoulli_adjustment(long n, double theta, double theta0, EstimatorKind kind) {
  const double mu = detail::expit(theta);
  const double v = mu * (1.0 - mu);
  const double nn = static_cast<double>(n);
  return scalar_adjustment(theta, theta0, nn * v, nn * v * (1.0 - 2.0 * mu), nn * v * (1.0 - 6.0 * v),
                           bernoulli_bias(n, theta), kind);
}

inline Statistics bernoulli_statistics(const BernoulliSample& s, double theta0) {
  s.validate();
  Statistics out;
  if (s.successes == 0 || s.successes == s.n) {
    out.boundary = true;
  } else {
    const ScalarAdjustment ml = bernoulli_adjustment(s.n, detail::logit(s.mean()), theta0, EstimatorKind::ML);
    out.t = ml.t;
    out.t_star = ml.adjusted();
  }
  const ScalarAdjustment rb = bernoulli_adjustment(s.n, bernoulli_rb_estimate(s), theta0, EstimatorKind::RB);
  out.t_tilde = rb.t;
  out.t_tilde_star = rb.adjusted();
  return out;
}

/// Adapter for the generic machinery: theta is the log-odds.
class BernoulliLogOddsModel {
 public:
  explicit BernoulliLogOddsModel(BernoulliSample s) : s_(s) { s_.validate(); }

  const BernoulliSample& sample() const { return s_; }
  Index dim() const { return 1; }

  Matrix info(const Vector& theta) const { return Matrix::Constant(1, 1, bernoulli_info(s_.n, theta(0))); }
  Vector bias(const Vector& theta) const { return Vector::Constant(1, bernoulli_bias(s_.n, theta(0))); }

  InfoDerivatives info_derivatives(const Vector& theta) const {
    const double mu = detail::expit(theta(0));
    const double v = mu * (1.0 - mu);
    const double nn = static_cast<double>(s_.n);
    InfoDerivatives d;
    d.first.push_back(Matrix::Constant(1, 1, nn * v * (1.0 - 2.0 * mu)));
    d.second.push_back(Matrix::Constant(1, 1, nn * v * (1.0 - 6.0 * v)));
    return d;
  }

  BernoulliLogOddsModel simulate(const Vector& theta, numkit::RngStream& rng) const {
    return BernoulliLogOddsModel({s_.n, numkit::draw_binomial(rng, s_.n, detail::expit(theta(0)))});
  }

  FitResult fit(EstimatorKind kind) const {
    FitResult r;
    r.kind = kind;
    r.converged = true;
    r.diverged.assign(1, false);
    double est;
    if (kind == EstimatorKind::RB) {
      est = bernoulli_rb_estimate(s_);
    } else if (s_.successes == 0 || s_.successes == s_.n) {
      est = s_.successes == 0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
      r.diverged[0] = true;
    } else {
      est = detail::logit(s_.mean());
    }
    r.theta = Vector::Constant(1, est);
    const double k = static_cast<double>(s_.successes);
    const double nn = static_cast<double>(s_.n);
    r.loglik = std::isfinite(est) ? k * est - nn * std::log1p(std::exp(est)) : 0.0;
    return r;
  }

 private:
  BernoulliSample s_;
};

// ---------------------------------------------------------- exponential

/// n independent exponential observations with mean exp(-theta).
struct ExponentialSample {
  long n = 0;
  double mean = 0.0;

  void validate() const {
    if (n < 1) fail(ErrorKind::DomainError, "exponential sample needs n >= 1");
    if (!(mean > 0.0) || !std::isfinite(mean)) fail(ErrorKind::DomainError, "exponential sample mean must be > 0");
  }
};

/// t = -sqrt(n)(log ybar + theta0), t* = t - 1/(2 sqrt(n)). The information
/// is constant, so t~* = t~.
inline Statistics exponential_statistics(const ExponentialSample& s, double theta0) {
  s.validate();
  const double rn = std::sqrt(static_cast<double>(s.n));
  Statistics out;
  out.t = -rn * (std::log(s.mean) + theta0);
  out.t_star = out.t - 0.5 / rn;
  out.t_tilde = out.t - 0.5 / rn;
  out.t_tilde_star = out.t_tilde;
  return out;
}

class ExponentialRateModel {
 public:
  explicit ExponentialRateModel(ExponentialSample s) : s_(s) { s_.validate(); }

  const ExponentialSample& sample() const { return s_; }
  Index dim() const { return 1; }

  Matrix info(const Vector&) const { return Matrix::Constant(1, 1, static_cast<double>(s_.n)); }
  Vector bias(const Vector&) const { return Vector::Constant(1, 0.5 / static_cast<double>(s_.n)); }

  InfoDerivatives info_derivatives(const Vector&) const {
    InfoDerivatives d;
    d.first.push_back(Matrix::Zero(1, 1));
    d.second.push_back(Matrix::Zero(1, 1));
    return d;
  }

  ExponentialRateModel simulate(const Vector& theta, numkit::RngStream& rng) const {
    const double rate = std::exp(theta(0));
    double sum = 0.0;
    for (long i = 0; i < s_.n; ++i) sum += numkit::draw_exponential(rng, rate);
    return ExponentialRateModel({s_.n, sum / static_cast<double>(s_.n)});
  }

  FitResult fit(EstimatorKind kind) const {
    FitResult r;
    r.kind = kind;
    r.converged = true;
    r.diverged.assign(1, false);
    double est = -std::log(s_.mean);
    if (kind == EstimatorKind::RB) est -= 0.5 / static_cast<double>(s_.n);
    r.theta = Vector::Constant(1, est);
    const double nn = static_cast<double>(s_.n);
    r.loglik = nn * est - nn * std::exp(est) * s_.mean;
    return r;
  }

 private:
  ExponentialSample s_;
};

// ------------------------------------------------- exact null distributions

struct Atom {
  long k = 0;
  double value = 0.0;
  double probability = 0.0;
};

struct ExactNullTable {
  double theta0 = 0.0;
  long n = 0;
  inference::StatisticFamily family = inference::StatisticFamily::T;
  std::vector<Atom> atoms;  // ordered by k

  /// P(statistic <= z) under the null.
  double cdf(double z) const {
    double g = 0.0;
    for (const Atom& a : atoms)
      if (a.value <= z) g += a.probability;
    return std::min(1.0, g);
  }

  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const Atom& a : atoms)
      if (a.probability > 0.0) m = std::min(m, a.value);
    return m;
  }
  double max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const Atom& a : atoms)
      if (a.probability > 0.0) m = std::max(m, a.value);
    return m;
  }
};

/// Binomial probabilities for k = 0..n, computed on the log scale.
inline std::vector<double> binomial_pmf(long n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) fail(ErrorKind::DomainError, "binomial_pmf needs n >= 0 and p in [0, 1]");
  std::vector<double> out(static_cast<std::size_t>(n + 1), 0.0);
  if (p == 0.0 || p == 1.0) {
    out[p == 0.0 ? 0 : static_cast<std::size_t>(n)] = 1.0;
    return out;
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  for (long k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    out[static_cast<std::size_t>(k)] =
        std::exp(lgn - std::lgamma(kk + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) + kk * lp +
                 static_cast<double>(n - k) * lq);
  }
  return out;
}

inline ExactNullTable exact_null_distribution(long n, double theta0, inference::StatisticFamily family) {
  if (n < 1 || n > 1000000) fail(ErrorKind::DomainError, "exact enumeration needs 1 <= n <= 1e6");
  ExactNullTable table;
  table.theta0 = theta0;
  table.n = n;
  table.family = family;
  const std::vector<double> pmf = binomial_pmf(n, detail::expit(theta0));
  table.atoms.reserve(pmf.size());
  for (long k = 0; k <= n; ++k)
    table.atoms.push_back({k, bernoulli_statistics({n, k}, theta0).get(family), pmf[static_cast<std::size_t>(k)]});
  return table;
}

/// Phi^-1(G(z)) - z at each z where G(z) lies in (0, 1); NaN elsewhere.
inline std::vector<double> normality_diagnostic(const ExactNullTable& table, const std::vector<double>& z) {
  std::vector<double> out;
  out.reserve(z.size());
  for (double zz : z) {
    const double g = table.cdf(zz);
    out.push_back(g > 0.0 && g < 1.0 - 1e-15 ? numkit::normal_quantile(g) - zz
                                             : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

// ------------------------------------------------- log-odds / proportions

inline IntervalEstimate logodds_ci(const BernoulliSample& s, double level,
                                   inference::StatisticFamily family = inference::StatisticFamily::TTildeStar,
                                   const inference::GridSpec& grid = {}) {
  s.validate();
  const BernoulliLogOddsModel model(s);
  const FitResult fit = model.fit(inference::estimator_for(family));
  return inference::invert_ci(model, fit, 0, level, family, grid);
}

/// Logistic transform of the log-odds interval endpoints.
inline IntervalEstimate proportion_ci(const BernoulliSample& s, double level,
                                      inference::StatisticFamily family = inference::StatisticFamily::TTildeStar,
                                      const inference::GridSpec& grid = {}) {
  IntervalEstimate out = logodds_ci(s, level, family, grid);
  out.lower = detail::expit(out.lower);
  out.upper = detail::expit(out.upper);
  return out;
}

/// Add z^2/2 successes and z^2/2 failures, then the Wald interval, clipped
/// to [0, 1].
inline IntervalEstimate agresti_coull_ci(const BernoulliSample& s, double level) {
  s.validate();
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::DomainError, "level must be in (0, 1)");
  const double z = numkit::normal_quantile(0.5 + 0.5 * level);
  const double nt = static_cast<double>(s.n) + z * z;
  const double pt = (static_cast<double>(s.successes) + 0.5 * z * z) / nt;
  const double half = z * std::sqrt(pt * (1.0 - pt) / nt);
  IntervalEstimate out;
  out.lower = std::max(0.0, pt - half);
  out.upper = std::min(1.0, pt + half);
  out.level = level;
  return out;
}

struct CoveragePoint {
  double p = 0.0;
  double coverage = 0.0;
  double expected_length = 0.0;
};

/// Exact coverage and expected length of proportion intervals at each p,
/// given the interval for every k = 0..n.
inline std::vector<CoveragePoint> exact_coverage(long n, const std::vector<IntervalEstimate>& by_k,
                                                 const std::vector<double>& p_grid) {
  if (static_cast<long>(by_k.size()) != n + 1) fail(ErrorKind::DomainError, "need one interval per k = 0..n");
  std::vector<CoveragePoint> out;
  out.reserve(p_grid.size());
  for (double p : p_grid) {
    const std::vector<double> pmf = binomial_pmf(n, p);
    CoveragePoint c;
    c.p = p;
    for (long k = 0; k <= n; ++k) {
      const auto& ci = by_k[static_cast<std::size_t>(k)];
      const double w = pmf[static_cast<std::size_t>(k)];
      if (ci.lower <= p && p <= ci.upper) c.coverage += w;
      c.expected_length += w * (ci.upper - ci.lower);
    }
    out.push_back(c);
  }
  return out;
}

enum class ProportionMethod { LaWald, AgrestiCoull };

inline std::vector<IntervalEstimate> proportion_intervals_all_k(long n, double level, ProportionMethod method) {
  std::vector<IntervalEstimate> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k)
    out.push_back(method == ProportionMethod::LaWald ? proportion_ci({n, k}, level) : agresti_coull_ci({n, k}, level));
  return out;
}

/// Uniform grid of `points` values over [lo, hi].
inline std::vector<double> uniform_grid(double lo, double hi, int points) {
  if (points < 2 || !(lo < hi)) fail(ErrorKind::DomainError, "uniform_grid needs lo < hi and at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return g;
}

}  // namespace adjwald::oneparam
