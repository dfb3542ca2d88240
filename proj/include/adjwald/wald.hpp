#pragma once

// Location-adjusted Wald statistics for a scalar component of a parameter
// vector, generic over any model that exposes its expected information and
// first-order bias.
//
// For the interest component j with null value psi0, the Wald transform is
//   T(theta) = (theta_j - psi0) / kappa(theta),   kappa = sqrt([i(theta)^-1]_jj)
// and the first-order bias of T(theta_hat) is
//   B = b(theta)' grad T + tr(i^-1 hess T) / 2.
// Reduced-bias estimators drop the b' grad T term. The adjusted statistic is
// t* = t - B evaluated at the fitted theta (no constrained refit).

#include <chrono>
#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/numkit/linalg.hpp"
#include "adjwald/numkit/numdiff.hpp"
#include "adjwald/numkit/random.hpp"

namespace adjwald {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

enum class EstimatorKind { ML, RB };

inline const char* to_string(EstimatorKind k) { return k == EstimatorKind::ML ? "ML" : "RB"; }

enum class DerivativePath { Automatic, Analytic, Numeric };

struct FitResult {
  Vector theta;
  EstimatorKind kind = EstimatorKind::ML;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  // Coordinates whose estimate is infinite (ML under separation).
  std::vector<bool> diverged;

  bool is_diverged(Index j) const {
    return static_cast<std::size_t>(j) < diverged.size() && diverged[static_cast<std::size_t>(j)];
  }
  bool any_diverged() const {
    for (bool d : diverged)
      if (d) return true;
    return false;
  }
};

/// Derivatives of the expected information: first[u] = d i / d theta_u,
/// second[u * p + v] = d^2 i / d theta_u d theta_v.
struct InfoDerivatives {
  std::vector<Matrix> first;
  std::vector<Matrix> second;

  const Matrix& second_at(Index u, Index v) const {
    return second[static_cast<std::size_t>(u * static_cast<Index>(first.size()) + v)];
  }
};

template <class M>
concept InformationModel = requires(const M& m, const Vector& theta) {
  { m.dim() } -> std::convertible_to<Index>;
  { m.info(theta) } -> std::convertible_to<Matrix>;
  { m.bias(theta) } -> std::convertible_to<Vector>;
};

template <class M>
concept AnalyticInfoModel = InformationModel<M> && requires(const M& m, const Vector& theta) {
  { m.info_derivatives(theta) } -> std::convertible_to<InfoDerivatives>;
};

/// Models that can be refitted on data simulated from a parameter value.
template <class M>
concept ResamplableModel = InformationModel<M> && requires(const M& m, const Vector& theta,
                                                           numkit::RngStream& rng, EstimatorKind kind) {
  { m.simulate(theta, rng) } -> std::convertible_to<M>;
  { m.fit(kind) } -> std::convertible_to<FitResult>;
};

struct WaldOptions {
  DerivativePath path = DerivativePath::Automatic;
  numkit::DiffSpec diff{};
};

template <InformationModel M>
double kappa(const M& model, const Vector& theta, Index j) {
  const Matrix inv = numkit::inverse_spd(model.info(theta));
  const double v = inv(j, j);
  if (!(v > 0.0)) fail(ErrorKind::NotPositiveDefinite, "non-positive variance for parameter " + std::to_string(j));
  return std::sqrt(v);
}

/// kappa and its gradient and hessian at theta.
struct KappaDerivatives {
  double kappa = 0.0;
  Vector gradient;
  Matrix hessian;
  bool numeric = false;
};

namespace detail {

template <InformationModel M>
bool use_analytic(const M&, DerivativePath path) {
  if constexpr (AnalyticInfoModel<M>) {
    return path != DerivativePath::Numeric;
  } else {
    if (path == DerivativePath::Analytic)
      fail(ErrorKind::InvalidModel, "analytic derivative path requested but model has no information derivatives");
    return false;
  }
}

// Analytic kappa derivatives from derivatives of i(theta). With J = i^-1 and
// r = row j of J, a_u = r D_u r', s_u = D_u r':
//   d kappa/du = -a_u / (2 kappa)
//   d2 kappa/dudv = -a_u a_v / (4 kappa^3) + (s_v' J s_u + s_u' J s_v) / (2 kappa)
//                   - r D_uv r' / (2 kappa)
inline KappaDerivatives kappa_from_info_derivatives(const Matrix& inv, const InfoDerivatives& d, Index j) {
  const Index p = inv.rows();
  KappaDerivatives out;
  out.kappa = std::sqrt(inv(j, j));
  const Vector r = inv.row(j).transpose();
  Matrix s(p, p);
  Vector a(p);
  for (Index u = 0; u < p; ++u) {
    s.col(u) = d.first[static_cast<std::size_t>(u)] * r;
    a(u) = r.dot(s.col(u));
  }
  const Matrix js = inv * s;
  const double k = out.kappa;
  out.gradient = -a / (2.0 * k);
  out.hessian.resize(p, p);
  for (Index u = 0; u < p; ++u) {
    for (Index v = u; v < p; ++v) {
      const double cross = s.col(v).dot(js.col(u)) + s.col(u).dot(js.col(v));
      const double second = r.dot(d.second_at(u, v) * r);
      const double h = -a(u) * a(v) / (4.0 * k * k * k) + cross / (2.0 * k) - second / (2.0 * k);
      out.hessian(u, v) = h;
      out.hessian(v, u) = h;
    }
  }
  return out;
}

}  // namespace detail

/// kappa derivatives for several interest components at once. Numeric
/// derivatives share probes across the requested components.
template <InformationModel M>
std::vector<KappaDerivatives> kappa_derivatives(const M& model, const Vector& theta, const std::vector<Index>& js,
                                                const WaldOptions& options = {}) {
  std::vector<KappaDerivatives> out;
  out.reserve(js.size());
  if (detail::use_analytic(model, options.path)) {
    if constexpr (AnalyticInfoModel<M>) {
      const Matrix inv = numkit::inverse_spd(model.info(theta));
      const InfoDerivatives d = model.info_derivatives(theta);
      for (Index j : js) out.push_back(detail::kappa_from_info_derivatives(inv, d, j));
    }
    return out;
  }
  auto kappas = [&](const Vector& x) {
    const Matrix inv = numkit::inverse_spd(model.info(x));
    Vector k(static_cast<Index>(js.size()));
    for (std::size_t c = 0; c < js.size(); ++c) k(static_cast<Index>(c)) = std::sqrt(inv(js[c], js[c]));
    return k;
  };
  const Vector k0 = kappas(theta);
  const numkit::MultiDerivatives nd = numkit::num_derivatives_multi(kappas, theta, options.diff);
  for (std::size_t c = 0; c < js.size(); ++c) {
    KappaDerivatives kd;
    kd.kappa = k0(static_cast<Index>(c));
    kd.gradient = nd.jacobian.row(static_cast<Index>(c)).transpose();
    kd.hessian = 0.5 * (nd.hessians[c] + nd.hessians[c].transpose());
    kd.numeric = true;
    out.push_back(std::move(kd));
  }
  return out;
}

template <InformationModel M>
KappaDerivatives kappa_derivatives(const M& model, const Vector& theta, Index j, const WaldOptions& options = {}) {
  return kappa_derivatives(model, theta, std::vector<Index>{j}, options).front();
}

struct TransformDerivatives {
  double value = 0.0;  // T(theta; psi0)
  Vector gradient;
  Matrix hessian;
};

/// grad T = (e_j - T grad kappa) / kappa
/// hess T = -(grad kappa grad T' + grad T grad kappa' + T hess kappa) / kappa
inline TransformDerivatives wald_transform_derivatives(const KappaDerivatives& kd, double theta_j, Index j,
                                                       double psi0) {
  TransformDerivatives out;
  out.value = (theta_j - psi0) / kd.kappa;
  out.gradient = -out.value * kd.gradient;
  out.gradient(j) += 1.0;
  out.gradient /= kd.kappa;
  out.hessian = -(kd.gradient * out.gradient.transpose() + out.gradient * kd.gradient.transpose() +
                  out.value * kd.hessian) /
                kd.kappa;
  return out;
}

template <InformationModel M>
TransformDerivatives wald_transform_derivatives(const M& model, const Vector& theta, Index j, double psi0,
                                                const WaldOptions& options = {}) {
  return wald_transform_derivatives(kappa_derivatives(model, theta, j, options), theta(j), j, psi0);
}

/// Everything needed to evaluate T(theta; psi) - B(theta; psi) for any psi
/// at a fixed theta. B is affine in T, so one precomputation serves a whole
/// grid of null values.
class LocationAdjustment {
 public:
  LocationAdjustment(Vector theta, Index j, EstimatorKind kind, KappaDerivatives kd, Matrix inverse_info,
                     Vector bias)
      : theta_(std::move(theta)), j_(j), kind_(kind), kd_(std::move(kd)), inv_(std::move(inverse_info)),
        bias_(std::move(bias)) {}

  Index index() const { return j_; }
  EstimatorKind kind() const { return kind_; }
  double estimate() const { return theta_(j_); }
  double se() const { return kd_.kappa; }
  bool numeric() const { return kd_.numeric; }
  const KappaDerivatives& kappa_derivatives() const { return kd_; }

  double wald(double psi0) const { return (theta_(j_) - psi0) / kd_.kappa; }

  double bias(double psi0) const {
    const TransformDerivatives td = wald_transform_derivatives(kd_, theta_(j_), j_, psi0);
    const double trace_term = 0.5 * (inv_.cwiseProduct(td.hessian)).sum();
    if (kind_ == EstimatorKind::RB) return trace_term;
    return bias_.dot(td.gradient) + trace_term;
  }

  double adjusted(double psi0) const { return wald(psi0) - bias(psi0); }

 private:
  Vector theta_;
  Index j_;
  EstimatorKind kind_;
  KappaDerivatives kd_;
  Matrix inv_;
  Vector bias_;
};

template <InformationModel M>
std::vector<LocationAdjustment> location_adjustments(const M& model, const Vector& theta, EstimatorKind kind,
                                                     const std::vector<Index>& js, const WaldOptions& options = {}) {
  const Matrix inv = numkit::inverse_spd(model.info(theta));
  const Vector b = kind == EstimatorKind::ML ? Vector(model.bias(theta)) : Vector::Zero(theta.size());
  auto kds = kappa_derivatives(model, theta, js, options);
  std::vector<LocationAdjustment> out;
  out.reserve(js.size());
  for (std::size_t c = 0; c < js.size(); ++c) out.emplace_back(theta, js[c], kind, std::move(kds[c]), inv, b);
  return out;
}

template <InformationModel M>
LocationAdjustment location_adjustment(const M& model, const Vector& theta, EstimatorKind kind, Index j,
                                       const WaldOptions& options = {}) {
  return std::move(location_adjustments(model, theta, kind, std::vector<Index>{j}, options).front());
}

/// First-order bias of the Wald transform at (theta, psi0).
template <InformationModel M>
double bias_B(const M& model, const Vector& theta, Index j, double psi0, EstimatorKind kind,
              const WaldOptions& options = {}) {
  return location_adjustment(model, theta, kind, j, options).bias(psi0);
}

template <InformationModel M>
double wald_statistic(const M& model, const FitResult& fit, Index j, double psi0) {
  if (fit.is_diverged(j)) fail(ErrorKind::InfiniteEstimate, "estimate for parameter " + std::to_string(j) + " is infinite");
  if (!std::isfinite(fit.theta(j))) fail(ErrorKind::InfiniteEstimate, "non-finite estimate");
  return (fit.theta(j) - psi0) / kappa(model, fit.theta, j);
}

struct WaldEntry {
  Index index = 0;
  double estimate = 0.0;
  double psi0 = 0.0;
  double se = 0.0;
  double t = 0.0;
  double bias_B = 0.0;
  double t_star = 0.0;
  bool used_numeric_derivatives = false;
  // ML estimate is infinite; t = t* = 0 by convention.
  bool diverged = false;
  std::optional<std::string> error;
  double seconds = 0.0;
};

struct WaldReport {
  EstimatorKind kind = EstimatorKind::ML;
  std::vector<WaldEntry> entries;
};

/// LA Wald statistics for the components listed in `indices` (all when
/// empty). Each component is computed independently; a failure on one is
/// recorded in its entry without aborting the others.
template <InformationModel M>
WaldReport location_adjusted_wald(const M& model, const FitResult& fit, const Vector& psi0,
                                  const WaldOptions& options = {}, std::vector<Index> indices = {}) {
  const Index p = model.dim();
  if (indices.empty())
    for (Index j = 0; j < p; ++j) indices.push_back(j);
  if (psi0.size() != p) fail(ErrorKind::DomainError, "psi0 must have one entry per parameter");

  WaldReport report;
  report.kind = fit.kind;
  for (Index j : indices) {
    const auto start = std::chrono::steady_clock::now();
    WaldEntry e;
    e.index = j;
    e.estimate = fit.theta(j);
    e.psi0 = psi0(j);
    if (fit.is_diverged(j)) {
      e.diverged = true;
      e.error = "DivergedEstimate";
    } else {
      try {
        const LocationAdjustment la = location_adjustment(model, fit.theta, fit.kind, j, options);
        e.se = la.se();
        e.t = la.wald(e.psi0);
        e.bias_B = la.bias(e.psi0);
        e.t_star = e.t - e.bias_B;
        e.used_numeric_derivatives = la.numeric();
      } catch (const Error& err) {
        e.error = err.what();
      }
    }
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.entries.push_back(std::move(e));
  }
  return report;
}

template <InformationModel M>
WaldReport location_adjusted_wald(const M& model, const FitResult& fit, double psi0 = 0.0,
                                  const WaldOptions& options = {}, std::vector<Index> indices = {}) {
  return location_adjusted_wald(model, fit, Vector::Constant(model.dim(), psi0), options, std::move(indices));
}

}  // namespace adjwald
