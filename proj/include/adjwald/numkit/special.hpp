#pragma once

// Special functions needed by the gamma GLM and beta regression likelihoods.
//
// digamma/polygamma use upward recurrence to x >= 15 followed by the
// asymptotic Bernoulli-number series; that gives ~1e-15 relative accuracy
// for x >= 1. log_gamma uses the Stirling series with the same shift.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "adjwald/error.hpp"

namespace adjwald::numkit {

namespace detail {

inline constexpr double kAsymptoticThreshold = 15.0;

// B_{2k} for k = 1..8
inline constexpr std::array<double, 8> kBernoulliEven = {
    1.0 / 6.0,   -1.0 / 30.0,      1.0 / 42.0, -1.0 / 30.0,
    5.0 / 66.0,  -691.0 / 2730.0,  7.0 / 6.0,  -3617.0 / 510.0};

inline void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    fail(ErrorKind::DomainError, std::string(name) + " requires finite x > 0, got " + std::to_string(x));
  }
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace detail

/// n-th derivative of the digamma function, n in {0, 1, 2, 3}.
inline double polygamma(int n, double x) {
  detail::require_positive(x, "polygamma");
  if (n < 0 || n > 3) fail(ErrorKind::DomainError, "polygamma order must be in 0..3");

  // psi^(n)(x) = psi^(n)(x+1) + (-1)^(n+1) n! / x^(n+1)
  const double sign = (n % 2 == 0) ? -1.0 : 1.0;
  const double nfact = detail::factorial(n);
  double shift = 0.0;
  while (x < detail::kAsymptoticThreshold) {
    shift += sign * nfact / std::pow(x, n + 1);
    x += 1.0;
  }

  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  if (n == 0) {
    series = std::log(x) - 0.5 * inv;
    double pw = inv2;
    for (std::size_t k = 0; k < detail::kBernoulliEven.size(); ++k) {
      const double twok = 2.0 * static_cast<double>(k + 1);
      series -= detail::kBernoulliEven[k] / twok * pw;
      pw *= inv2;
    }
  } else {
    // (-1)^(n+1) [ (n-1)!/x^n + n!/(2 x^(n+1)) + sum_k B_2k (2k+n-1)!/((2k)! x^(2k+n)) ]
    double acc = detail::factorial(n - 1) * std::pow(inv, n) + 0.5 * nfact * std::pow(inv, n + 1);
    double pw = std::pow(inv, n + 2);
    for (std::size_t k = 0; k < detail::kBernoulliEven.size(); ++k) {
      const int twok = 2 * static_cast<int>(k + 1);
      acc += detail::kBernoulliEven[k] * detail::factorial(twok + n - 1) / detail::factorial(twok) * pw;
      pw *= inv2;
    }
    series = (n % 2 == 1) ? acc : -acc;
  }
  return series + shift;
}

inline double digamma(double x) { return polygamma(0, x); }
inline double trigamma(double x) { return polygamma(1, x); }

inline double log_gamma(double x) {
  detail::require_positive(x, "log_gamma");
  // log Gamma(x) = log Gamma(x+m) - log(x (x+1) ... (x+m-1))
  double log_shift = 0.0;
  double prod = 1.0;
  while (x < detail::kAsymptoticThreshold) {
    prod *= x;
    if (prod > 1e250 || prod < 1e-250) {
      log_shift += std::log(prod);
      prod = 1.0;
    }
    x += 1.0;
  }
  log_shift += std::log(prod);

  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi);
  double pw = inv;
  for (std::size_t k = 0; k < detail::kBernoulliEven.size(); ++k) {
    const double twok = 2.0 * static_cast<double>(k + 1);
    series += detail::kBernoulliEven[k] / (twok * (twok - 1.0)) * pw;
    pw *= inv2;
  }
  return series - log_shift;
}

// Standard normal distribution.

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(z) without cancellation.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// Inverse of the standard normal cdf (Wichura, AS 241, double precision).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    fail(ErrorKind::DomainError, "normal_quantile requires p in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

}  // namespace adjwald::numkit
