#pragma once

// Families and links of the exponential dispersion family. For a family
// with unknown dispersion the density is
//   exp{ m (y theta - h(theta) - c1(y)) / phi - a(-m/phi) / 2 + c2(y) },
// and only a(.) and its derivatives enter the dispersion information.

#include <cmath>
#include <numbers>
#include <string>

#include "adjwald/error.hpp"
#include "adjwald/numkit/special.hpp"

namespace adjwald::glm {

enum class Family { Binomial, Poisson, Gamma, Gaussian };
enum class Link { Logit, Probit, Log, Identity };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Binomial: return "binomial";
    case Family::Poisson: return "poisson";
    case Family::Gamma: return "gamma";
    case Family::Gaussian: return "gaussian";
  }
  return "?";
}

inline const char* to_string(Link l) {
  switch (l) {
    case Link::Logit: return "logit";
    case Link::Probit: return "probit";
    case Link::Log: return "log";
    case Link::Identity: return "identity";
  }
  return "?";
}

/// Inverse link and its first three derivatives with respect to eta.
struct LinkEval {
  double mu, d1, d2, d3;
};

/// Variance function and its first two derivatives with respect to mu.
struct VarianceEval {
  double v, v1, v2;
};

struct FamilyLink {
  Family family = Family::Gaussian;
  Link link = Link::Identity;

  static FamilyLink parse(const std::string& s) {
    if (s == "binomial-logit") return {Family::Binomial, Link::Logit};
    if (s == "binomial-probit") return {Family::Binomial, Link::Probit};
    if (s == "poisson-log") return {Family::Poisson, Link::Log};
    if (s == "gamma-log") return {Family::Gamma, Link::Log};
    if (s == "gaussian-identity") return {Family::Gaussian, Link::Identity};
    fail(ErrorKind::ConfigError, "unsupported family/link '" + s +
                                     "' (expected binomial-logit, binomial-probit, poisson-log, gamma-log or "
                                     "gaussian-identity)");
  }

  std::string name() const { return std::string(to_string(family)) + "-" + to_string(link); }

  bool dispersion_fixed() const { return family == Family::Binomial || family == Family::Poisson; }

  LinkEval inverse_link(double eta) const {
    switch (link) {
      case Link::Logit: {
        const double mu = 1.0 / (1.0 + std::exp(-eta));
        const double d1 = mu * (1.0 - mu);
        return {mu, d1, d1 * (1.0 - 2.0 * mu), d1 * (1.0 - 6.0 * d1)};
      }
      case Link::Probit: {
        const double phi = numkit::normal_pdf(eta);
        return {numkit::normal_cdf(eta), phi, -eta * phi, (eta * eta - 1.0) * phi};
      }
      case Link::Log: {
        const double mu = std::exp(eta);
        return {mu, mu, mu, mu};
      }
      case Link::Identity: return {eta, 1.0, 0.0, 0.0};
    }
    return {0, 0, 0, 0};
  }

  double link_fn(double mu) const {
    switch (link) {
      case Link::Logit: return std::log(mu / (1.0 - mu));
      case Link::Probit: return numkit::normal_quantile(mu);
      case Link::Log: return std::log(mu);
      case Link::Identity: return mu;
    }
    return 0.0;
  }

  VarianceEval variance(double mu) const {
    switch (family) {
      case Family::Binomial: return {mu * (1.0 - mu), 1.0 - 2.0 * mu, -2.0};
      case Family::Poisson: return {mu, 1.0, 0.0};
      case Family::Gamma: return {mu * mu, 2.0 * mu, 2.0};
      case Family::Gaussian: return {1.0, 0.0, 0.0};
    }
    return {1, 0, 0};
  }

  bool valid_mu(double mu) const {
    if (!std::isfinite(mu)) return false;
    switch (family) {
      case Family::Binomial: return mu > 0.0 && mu < 1.0;
      case Family::Poisson:
      case Family::Gamma: return mu > 0.0;
      case Family::Gaussian: return true;
    }
    return false;
  }

  void check_response(double y) const {
    const bool ok = [&] {
      switch (family) {
        case Family::Binomial: return y >= 0.0 && y <= 1.0;
        case Family::Poisson: return y >= 0.0;
        case Family::Gamma: return y > 0.0;
        case Family::Gaussian: return std::isfinite(y);
      }
      return false;
    }();
    if (!ok) fail(ErrorKind::DataError, "response value " + std::to_string(y) + " is outside the support of the " +
                                            to_string(family) + " family");
  }

  /// y theta - h(theta) - c1(y) at mean mu, for the dispersion families.
  double dispersion_kernel(double y, double mu) const {
    switch (family) {
      case Family::Gamma: return -y / mu - std::log(mu) + std::log(y);
      case Family::Gaussian: return -0.5 * (y - mu) * (y - mu);
      default: return 0.0;
    }
  }

  /// Derivatives a^(r)(u), r = 1..4, of a(.) at u < 0.
  double a_deriv(int order, double u) const {
    const double s = -u;
    if (family == Family::Gamma) {
      switch (order) {
        case 1: return -2.0 * numkit::digamma(s) + 2.0 * std::log(s) + 2.0;
        case 2: return 2.0 * numkit::trigamma(s) + 2.0 / u;
        case 3: return -2.0 * numkit::polygamma(2, s) - 2.0 / (u * u);
        case 4: return 2.0 * numkit::polygamma(3, s) + 4.0 / (u * u * u);
      }
    } else if (family == Family::Gaussian) {
      switch (order) {
        case 1: return -1.0 / u;
        case 2: return 1.0 / (u * u);
        case 3: return -2.0 / (u * u * u);
        case 4: return 6.0 / (u * u * u * u);
      }
    }
    fail(ErrorKind::InvalidModel, std::string("family ") + to_string(family) + " has no dispersion function");
  }

  /// Log-density of one observation with weight m at mean mu.
  double log_density(double y, double mu, double m, double phi) const {
    switch (family) {
      case Family::Binomial: {
        const double s = m * y;
        double ll = std::lgamma(m + 1.0) - std::lgamma(s + 1.0) - std::lgamma(m - s + 1.0);
        if (s > 0.0) ll += s * std::log(mu);
        if (m - s > 0.0) ll += (m - s) * std::log1p(-mu);
        return ll;
      }
      case Family::Poisson:
        return m * ((y > 0.0 ? y * std::log(mu) : 0.0) - mu - std::lgamma(y + 1.0));
      case Family::Gamma: {
        const double nu = m / phi;
        return nu * std::log(nu) - std::lgamma(nu) + nu * (-y / mu - std::log(mu)) + (nu - 1.0) * std::log(y);
      }
      case Family::Gaussian:
        return -0.5 * std::log(2.0 * std::numbers::pi * phi / m) - m * (y - mu) * (y - mu) / (2.0 * phi);
    }
    return 0.0;
  }
};

}  // namespace adjwald::glm
