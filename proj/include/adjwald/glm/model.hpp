#pragma once

// Generalized linear models in the exponential dispersion family.
//
// Parameter layout: theta = (beta, phi) when the dispersion is estimated,
// theta = beta when it is known (binomial and Poisson fix phi = 1).
//
// With w_i = m_i d_i^2 / V(mu_i), d_i = dmu_i/deta_i, the expected
// information is block diagonal:
//   i_bb = X' W X / phi,   i_pp = sum m_i^2 a''(-m_i/phi) / (2 phi^4).
// Writing r_i = dlog d_i/deta_i and l_i = dlog V(mu_i)/deta_i,
//   dw_i/deta_i = w_i (2 r_i - l_i),
//   d2w_i/deta_i^2 = w_i {(2 r_i - l_i)^2 + 2 r_i' - l_i'}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/glm/family.hpp"
#include "adjwald/glm/separation.hpp"
#include "adjwald/numkit/linalg.hpp"
#include "adjwald/numkit/random.hpp"
#include "adjwald/wald.hpp"

namespace adjwald::glm {

struct GlmSpec {
  FamilyLink family;
  Matrix X;
  Vector y;
  Vector weights;  // m_i; binomial totals for binomial responses given as proportions
  Vector offset;
  std::optional<double> dispersion;  // known phi; forced to 1 for binomial and Poisson
  std::vector<std::string> coef_names;

  void validate() {
    const Index n = X.rows();
    if (y.size() != n) fail(ErrorKind::DataError, "response length does not match the model matrix");
    if (weights.size() == 0) weights = Vector::Ones(n);
    if (offset.size() == 0) offset = Vector::Zero(n);
    if (weights.size() != n || offset.size() != n) fail(ErrorKind::DataError, "weights/offset length mismatch");
    if (n < X.cols()) fail(ErrorKind::DataError, "fewer observations than coefficients");
    if (!X.allFinite() || !y.allFinite() || !offset.allFinite()) fail(ErrorKind::DataError, "non-finite data");
    for (Index i = 0; i < n; ++i) {
      if (!(weights(i) >= 0.0)) fail(ErrorKind::DataError, "negative weight in row " + std::to_string(i + 1));
      family.check_response(y(i));
    }
    if (family.dispersion_fixed()) dispersion = 1.0;
    if (dispersion && !(*dispersion > 0.0)) fail(ErrorKind::DataError, "known dispersion must be > 0");
    if (X.cols() > 0) {
      Eigen::ColPivHouseholderQR<Matrix> qr(X);
      if (qr.rank() < X.cols()) fail(ErrorKind::InvalidModel, "model matrix is not of full column rank");
    }
    if (coef_names.empty())
      for (Index j = 0; j < X.cols(); ++j) coef_names.push_back("beta" + std::to_string(j + 1));
  }
};

/// Per-observation quantities at a given beta.
struct Workspace {
  Vector eta, mu, d1, v, w;
  Vector r, l, r1, l1;  // r = dlog d/deta, l = dlog V/deta and their eta-derivatives
  Vector ratio;         // d2/d1
};

struct IrlsOutcome {
  Vector beta;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  double objective = 0.0;
};

class GlmModel {
 public:
  explicit GlmModel(GlmSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const GlmSpec& spec() const { return spec_; }
  const FamilyLink& family() const { return spec_.family; }
  Index n_obs() const { return spec_.X.rows(); }
  Index n_coef() const { return spec_.X.cols(); }
  bool estimates_dispersion() const { return !spec_.dispersion.has_value(); }
  Index dim() const { return n_coef() + (estimates_dispersion() ? 1 : 0); }

  std::vector<std::string> parameter_names() const {
    auto names = spec_.coef_names;
    if (estimates_dispersion()) names.emplace_back("phi");
    return names;
  }

  Vector beta_of(const Vector& theta) const { return theta.head(n_coef()); }
  double phi_of(const Vector& theta) const { return estimates_dispersion() ? theta(n_coef()) : *spec_.dispersion; }

  Workspace workspace(const Vector& beta) const {
    const Index n = n_obs();
    Workspace ws;
    ws.eta = spec_.X * beta + spec_.offset;
    ws.mu.resize(n);
    ws.d1.resize(n);
    ws.v.resize(n);
    ws.w.resize(n);
    ws.r.resize(n);
    ws.l.resize(n);
    ws.r1.resize(n);
    ws.l1.resize(n);
    ws.ratio.resize(n);
    for (Index i = 0; i < n; ++i) {
      const LinkEval le = spec_.family.inverse_link(ws.eta(i));
      if (!spec_.family.valid_mu(le.mu) || !(le.d1 > 0.0))
        fail(ErrorKind::NonFiniteEvaluation, "fitted mean out of range at observation " + std::to_string(i + 1));
      const VarianceEval ve = spec_.family.variance(le.mu);
      ws.mu(i) = le.mu;
      ws.d1(i) = le.d1;
      ws.v(i) = ve.v;
      ws.w(i) = spec_.weights(i) * le.d1 * le.d1 / ve.v;
      const double r = le.d2 / le.d1;
      const double l = ve.v1 * le.d1 / ve.v;
      ws.ratio(i) = r;
      ws.r(i) = r;
      ws.l(i) = l;
      ws.r1(i) = le.d3 / le.d1 - r * r;
      ws.l1(i) = (ve.v2 * le.d1 * le.d1 + ve.v1 * le.d2) / ve.v - l * l;
    }
    return ws;
  }

  /// Part of the log-likelihood that depends on beta, at phi = 1.
  double beta_objective(const Workspace& ws) const {
    double s = 0.0;
    for (Index i = 0; i < n_obs(); ++i) {
      const double m = spec_.weights(i), y = spec_.y(i), mu = ws.mu(i);
      switch (spec_.family.family) {
        case Family::Binomial:
          if (y > 0.0) s += m * y * std::log(mu);
          if (y < 1.0) s += m * (1.0 - y) * std::log1p(-mu);
          break;
        case Family::Poisson: s += m * ((y > 0.0 ? y * std::log(mu) : 0.0) - mu); break;
        case Family::Gamma: s += m * (-y / mu - std::log(mu)); break;
        case Family::Gaussian: s -= 0.5 * m * (y - mu) * (y - mu); break;
      }
    }
    return s;
  }

  /// X' diag(m (y - mu) d / V): the beta score at phi = 1.
  Vector beta_score(const Workspace& ws) const {
    Vector u(n_obs());
    for (Index i = 0; i < n_obs(); ++i)
      u(i) = spec_.weights(i) * (spec_.y(i) - ws.mu(i)) * ws.d1(i) / ws.v(i);
    return spec_.X.transpose() * u;
  }

  Matrix xtwx(const Vector& w) const { return spec_.X.transpose() * w.asDiagonal() * spec_.X; }

  double log_likelihood(const Vector& theta) const {
    const Workspace ws = workspace(beta_of(theta));
    const double phi = phi_of(theta);
    double s = 0.0;
    for (Index i = 0; i < n_obs(); ++i) {
      if (spec_.weights(i) == 0.0) continue;
      s += spec_.family.log_density(spec_.y(i), ws.mu(i), spec_.weights(i), phi);
    }
    return s;
  }

  // sum_i m_i {K_i + a'(-m_i/phi)/2}; the dispersion score is -1/phi^2 times this.
  double dispersion_equation(const Workspace& ws, double phi) const {
    double g = 0.0;
    for (Index i = 0; i < n_obs(); ++i) {
      const double m = spec_.weights(i);
      if (m == 0.0) continue;
      g += m * spec_.family.dispersion_kernel(spec_.y(i), ws.mu(i)) + 0.5 * m * spec_.family.a_deriv(1, -m / phi);
    }
    return g;
  }

  Vector score(const Vector& theta) const {
    const Workspace ws = workspace(beta_of(theta));
    const double phi = phi_of(theta);
    Vector u(dim());
    u.head(n_coef()) = beta_score(ws) / phi;
    if (estimates_dispersion()) u(n_coef()) = -dispersion_equation(ws, phi) / (phi * phi);
    return u;
  }

  double pearson_dispersion(const Vector& beta) const {
    const Workspace ws = workspace(beta);
    const Index df = n_obs() - n_coef();
    if (df <= 0) fail(ErrorKind::DomainError, "Pearson dispersion needs n > number of coefficients");
    double s = 0.0;
    for (Index i = 0; i < n_obs(); ++i) {
      const double e = spec_.y(i) - ws.mu(i);
      s += spec_.weights(i) * e * e / ws.v(i);
    }
    return s / static_cast<double>(df);
  }

  /// Root of the dispersion score at fixed beta.
  double ml_dispersion(const Vector& beta) const {
    if (!estimates_dispersion()) return *spec_.dispersion;
    const Workspace ws = workspace(beta);
    if (spec_.family.family == Family::Gaussian) {
      double s = 0.0, mtot = 0.0;
      for (Index i = 0; i < n_obs(); ++i) {
        const double e = spec_.y(i) - ws.mu(i);
        s += spec_.weights(i) * e * e;
        mtot += spec_.weights(i) > 0.0 ? 1.0 : 0.0;
      }
      if (!(s > 0.0)) fail(ErrorKind::DomainError, "zero residual dispersion");
      return s / mtot;
    }
    // Newton on log(phi), safeguarded by a bracket; the equation increases in phi.
    auto g = [&](double lp) { return dispersion_equation(ws, std::exp(lp)); };
    double x = std::log(std::max(1e-8, pearson_dispersion(beta)));
    double lo = x, hi = x;
    double glo = g(lo), ghi = glo;
    for (int k = 0; glo > 0.0; ++k) {
      if (k > 60) fail(ErrorKind::DidNotConverge, "cannot bracket the dispersion root");
      hi = lo;
      ghi = glo;
      lo -= 2.0;
      glo = g(lo);
    }
    for (int k = 0; ghi < 0.0; ++k) {
      if (k > 60) fail(ErrorKind::DidNotConverge, "cannot bracket the dispersion root");
      lo = hi;
      glo = ghi;
      hi += 2.0;
      ghi = g(hi);
    }
    if (glo == 0.0) return std::exp(lo);
    if (ghi == 0.0) return std::exp(hi);
    x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double phi = std::exp(x);
      const double gx = dispersion_equation(ws, phi);
      if (gx == 0.0) return phi;
      if (gx < 0.0) lo = x;
      else hi = x;
      double slope = 0.0;  // dg/dlog(phi)
      for (Index i = 0; i < n_obs(); ++i) {
        const double m = spec_.weights(i);
        if (m > 0.0) slope += 0.5 * m * spec_.family.a_deriv(2, -m / phi) * m / phi;
      }
      double next = slope > 0.0 ? x - gx / slope : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - x) <= 1e-14 * (1.0 + std::fabs(x)) || hi - lo <= 1e-15 * (1.0 + std::fabs(x)))
        return std::exp(next);
      x = next;
    }
    fail(ErrorKind::DidNotConverge, "dispersion root-finding did not converge");
  }

  /// Fisher scoring for beta with step-halving on the log-likelihood.
  IrlsOutcome irls(int max_iter = 100, bool throw_on_failure = true) const {
    const Index k = n_coef(), n = n_obs();
    IrlsOutcome out;
    out.beta = Vector::Zero(k);
    if (k == 0) {
      out.converged = true;
      out.objective = beta_objective(workspace(out.beta));
      return out;
    }
    // Starting values from the working response at a moved-in mean.
    Vector z(n), w0(n);
    for (Index i = 0; i < n; ++i) {
      const double m = spec_.weights(i), y = spec_.y(i);
      double mu0 = y;
      switch (spec_.family.family) {
        case Family::Binomial: mu0 = (m * y + 0.5) / (m + 1.0); break;
        case Family::Poisson: mu0 = y + 0.1; break;
        default: break;
      }
      const double eta0 = spec_.family.link_fn(mu0);
      const LinkEval le = spec_.family.inverse_link(eta0);
      z(i) = eta0 - spec_.offset(i) + (y - le.mu) / le.d1;
      w0(i) = std::max(m * le.d1 * le.d1 / spec_.family.variance(le.mu).v, 0.0);
    }
    out.beta = numkit::solve_spd(xtwx(w0), Vector(spec_.X.transpose() * (w0.asDiagonal() * z)));

    auto safe_ws = [&](const Vector& b) -> std::optional<Workspace> {
      try {
        return workspace(b);
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    auto ws = safe_ws(out.beta);
    if (!ws) {
      // Fall back to the working response at beta = 0 offsets.
      out.beta.setZero();
      ws = safe_ws(out.beta);
      if (!ws) fail(ErrorKind::NonFiniteEvaluation, "no valid starting values");
    }
    double obj = beta_objective(*ws);
    for (int it = 1; it <= max_iter; ++it) {
      out.iterations = it;
      const Vector u = beta_score(*ws);
      out.score_norm = u.cwiseAbs().maxCoeff();
      out.objective = obj;
      if (out.score_norm <= 1e-8 * (1.0 + std::fabs(obj))) {
        out.converged = true;
        break;
      }
      Vector step;
      try {
        step = numkit::solve_spd(xtwx(ws->w), u);
      } catch (const Error&) {
        break;
      }
      Vector cand = out.beta + step;
      std::optional<Workspace> cws;
      double cobj = -std::numeric_limits<double>::infinity();
      for (int half = 0; half < 40; ++half) {
        cws = safe_ws(cand);
        if (cws) {
          cobj = beta_objective(*cws);
          if (std::isfinite(cobj) && cobj >= obj - 1e-12 * std::fabs(obj)) break;
        }
        step *= 0.5;
        cand = out.beta + step;
        cws.reset();
      }
      if (!cws) break;
      out.beta = cand;
      ws = std::move(cws);
      obj = cobj;
      if (step.cwiseAbs().maxCoeff() <= 1e-10) {
        out.converged = true;
        out.score_norm = beta_score(*ws).cwiseAbs().maxCoeff();
        out.objective = obj;
        break;
      }
    }
    if (!out.converged && throw_on_failure)
      fail(ErrorKind::DidNotConverge, "IRLS did not converge in " + std::to_string(max_iter) +
                                          " iterations (score norm " + std::to_string(out.score_norm) + ")");
    return out;
  }

  bool interior_fit(const IrlsOutcome& ir) const {
    if (!ir.converged || ir.beta.size() != n_coef()) return false;
    const Vector mu = workspace(ir.beta).mu;
    return (mu.array() > 1e-6).all() && (mu.array() < 1.0 - 1e-6).all();
  }

  SeparationResult separation() const {
    if (spec_.family.family != Family::Binomial) return SeparationResult{SeparationKind::None,
                                                                          std::vector<bool>(n_coef(), false), false};
    try {
      return detect_separation(spec_.X, spec_.y, spec_.weights);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::LpCycleLimit) throw;
      // Heuristic: large coefficients with fitted probabilities at the boundary.
      const IrlsOutcome fit = irls(100, false);
      SeparationResult res;
      res.heuristic = true;
      res.divergent.assign(static_cast<std::size_t>(n_coef()), false);
      const Workspace ws = workspace(fit.beta);
      const bool saturated = (ws.w.array() < 1e-8).count() > 0;
      for (Index j = 0; j < n_coef(); ++j)
        if (std::fabs(fit.beta(j)) > 20.0 && saturated) res.divergent[static_cast<std::size_t>(j)] = true;
      res.kind = std::any_of(res.divergent.begin(), res.divergent.end(), [](bool b) { return b; })
                     ? SeparationKind::Partial
                     : SeparationKind::None;
      return res;
    }
  }

  FitResult fit_ml() const {
    FitResult r;
    r.kind = EstimatorKind::ML;
    r.diverged.assign(static_cast<std::size_t>(dim()), false);
    // A converged fit with every fitted mean away from the boundary is a
    // finite maximum, so the separation LP can be skipped.
    IrlsOutcome ir;
    if (spec_.family.family == Family::Binomial) ir = irls(100, false);
    const bool interior = interior_fit(ir);
    const SeparationResult sep =
        interior ? SeparationResult{SeparationKind::None, std::vector<bool>(n_coef(), false), false} : separation();
    if (sep.any()) {
      ir = irls(30, false);
      for (Index j = 0; j < n_coef(); ++j) r.diverged[static_cast<std::size_t>(j)] = sep.divergent[static_cast<std::size_t>(j)];
    } else if (!interior) {
      ir = irls();
    }
    r.theta.resize(dim());
    r.theta.head(n_coef()) = ir.beta;
    if (estimates_dispersion()) r.theta(n_coef()) = ml_dispersion(ir.beta);
    r.converged = ir.converged && !sep.any();
    r.iterations = ir.iterations;
    r.score_norm = ir.score_norm;
    r.loglik = log_likelihood(r.theta);
    return r;
  }

  /// Reduced-bias estimate by iterated bias correction,
  /// theta <- theta + i(theta)^-1 U(theta) - b(theta).
  FitResult fit_rb(int max_iter = 200) const {
    FitResult r;
    r.kind = EstimatorKind::RB;
    r.diverged.assign(static_cast<std::size_t>(dim()), false);
    Vector theta(dim());
    const IrlsOutcome start = irls(100, false);
    theta.head(n_coef()) = start.converged && (interior_fit(start) || !separation().any()) ? start.beta : Vector::Zero(n_coef());
    if (estimates_dispersion()) theta(n_coef()) = ml_dispersion(theta.head(n_coef()));

    for (int it = 1; it <= max_iter; ++it) {
      r.iterations = it;
      Vector step = numkit::solve_spd(info(theta), score(theta)) - bias(theta);
      Vector cand = theta + step;
      for (int half = 0; half < 40 && !admissible(cand); ++half) {
        step *= 0.5;
        cand = theta + step;
      }
      if (!admissible(cand)) fail(ErrorKind::DidNotConverge, "reduced-bias iteration left the parameter space");
      theta = cand;
      if (step.cwiseAbs().maxCoeff() <= 1e-8) {
        r.converged = true;
        break;
      }
    }
    if (!r.converged) fail(ErrorKind::DidNotConverge, "reduced-bias iteration did not converge");
    r.theta = theta;
    r.score_norm = (score(theta) - info(theta) * bias(theta)).cwiseAbs().maxCoeff();
    r.loglik = log_likelihood(theta);
    return r;
  }

  FitResult fit(EstimatorKind kind) const { return kind == EstimatorKind::ML ? fit_ml() : fit_rb(); }

  Matrix info(const Vector& theta) const {
    const Workspace ws = workspace(beta_of(theta));
    const double phi = phi_of(theta);
    Matrix out = Matrix::Zero(dim(), dim());
    out.topLeftCorner(n_coef(), n_coef()) = xtwx(ws.w) / phi;
    if (estimates_dispersion()) out(n_coef(), n_coef()) = dispersion_info(phi, 0);
    return out;
  }

  InfoDerivatives info_derivatives(const Vector& theta) const {
    const Workspace ws = workspace(beta_of(theta));
    const double phi = phi_of(theta);
    const Index k = n_coef(), p = dim();
    const Matrix& X = spec_.X;
    const Vector a = (2.0 * ws.r - ws.l);
    const Vector w1 = ws.w.cwiseProduct(a);
    const Vector w2 = ws.w.cwiseProduct(a.cwiseProduct(a) + 2.0 * ws.r1 - ws.l1);

    InfoDerivatives d;
    d.first.assign(static_cast<std::size_t>(p), Matrix::Zero(p, p));
    d.second.assign(static_cast<std::size_t>(p * p), Matrix::Zero(p, p));
    std::vector<Matrix> first_beta(static_cast<std::size_t>(k));
    for (Index u = 0; u < k; ++u) {
      first_beta[static_cast<std::size_t>(u)] = xtwx(w1.cwiseProduct(X.col(u)));
      d.first[static_cast<std::size_t>(u)].topLeftCorner(k, k) = first_beta[static_cast<std::size_t>(u)] / phi;
      for (Index v = u; v < k; ++v) {
        const Matrix h = xtwx(w2.cwiseProduct(X.col(u)).cwiseProduct(X.col(v))) / phi;
        d.second[static_cast<std::size_t>(u * p + v)].topLeftCorner(k, k) = h;
        d.second[static_cast<std::size_t>(v * p + u)].topLeftCorner(k, k) = h;
      }
    }
    if (estimates_dispersion()) {
      const Matrix base = xtwx(ws.w);
      Matrix& dphi = d.first[static_cast<std::size_t>(k)];
      dphi.topLeftCorner(k, k) = -base / (phi * phi);
      dphi(k, k) = dispersion_info(phi, 1);
      for (Index u = 0; u < k; ++u) {
        const Matrix h = -first_beta[static_cast<std::size_t>(u)] / (phi * phi);
        d.second[static_cast<std::size_t>(u * p + k)].topLeftCorner(k, k) = h;
        d.second[static_cast<std::size_t>(k * p + u)].topLeftCorner(k, k) = h;
      }
      Matrix& dpp = d.second[static_cast<std::size_t>(k * p + k)];
      dpp.topLeftCorner(k, k) = 2.0 * base / (phi * phi * phi);
      dpp(k, k) = dispersion_info(phi, 2);
    }
    return d;
  }

  /// First-order bias of the ML estimator.
  ///   b_beta = -(phi/2) (X'WX)^-1 sum_i h_i (d2_i/d1_i) x_i,  h_i = w_i x_i'(X'WX)^-1 x_i
  ///   b_phi  = {-k/phi + sum(a'' m^2/phi^5 - a''' m^3/(2 phi^6)) / I} / (2 I),  I = i_pp
  Vector bias(const Vector& theta) const {
    const Workspace ws = workspace(beta_of(theta));
    const double phi = phi_of(theta);
    const Index k = n_coef();
    Vector out = Vector::Zero(dim());
    if (k > 0) {
      const Eigen::LLT<Matrix> llt = numkit::spd_factor(xtwx(ws.w));
      const Matrix sol = llt.solve(Matrix(spec_.X.transpose()));  // (X'WX)^-1 X'
      Vector xi(n_obs());
      for (Index i = 0; i < n_obs(); ++i) {
        const double h = ws.w(i) * spec_.X.row(i).dot(sol.col(i));
        xi(i) = h * ws.ratio(i);
      }
      out.head(k) = -0.5 * phi * (sol * xi);
    }
    if (estimates_dispersion()) {
      const double I = dispersion_info(phi, 0);
      double s = 0.0;
      for (Index i = 0; i < n_obs(); ++i) {
        const double m = spec_.weights(i);
        if (m == 0.0) continue;
        const double u = -m / phi;
        s += spec_.family.a_deriv(2, u) * m * m / std::pow(phi, 5) -
             0.5 * spec_.family.a_deriv(3, u) * m * m * m / std::pow(phi, 6);
      }
      out(k) = 0.5 / I * (-static_cast<double>(k) / phi + s / I);
    }
    return out;
  }

  /// i_pp (order 0) and its first and second derivatives in phi.
  double dispersion_info(double phi, int order) const {
    double s = 0.0;
    for (Index i = 0; i < n_obs(); ++i) {
      const double m = spec_.weights(i);
      if (m == 0.0) continue;
      const double u = -m / phi;
      const double a2 = spec_.family.a_deriv(2, u);
      const double m2 = m * m;
      switch (order) {
        case 0: s += 0.5 * m2 * a2 / std::pow(phi, 4); break;
        case 1: s += -2.0 * a2 * m2 / std::pow(phi, 5) + 0.5 * spec_.family.a_deriv(3, u) * m2 * m / std::pow(phi, 6); break;
        default:
          s += 10.0 * a2 * m2 / std::pow(phi, 6) - 5.0 * spec_.family.a_deriv(3, u) * m2 * m / std::pow(phi, 7) +
               0.5 * spec_.family.a_deriv(4, u) * m2 * m2 / std::pow(phi, 8);
      }
    }
    return s;
  }

  /// New model with responses drawn from the fitted distribution at theta.
  GlmModel simulate(const Vector& theta, numkit::RngStream& rng) const {
    const Workspace ws = workspace(beta_of(theta));
    const double phi = phi_of(theta);
    GlmSpec s = spec_;
    for (Index i = 0; i < n_obs(); ++i) {
      const double m = spec_.weights(i), mu = ws.mu(i);
      switch (spec_.family.family) {
        case Family::Binomial: {
          const long trials = std::lround(m);
          s.y(i) = trials > 0 ? static_cast<double>(numkit::draw_binomial(rng, trials, mu)) / static_cast<double>(trials)
                              : spec_.y(i);
          break;
        }
        case Family::Poisson:
          s.y(i) = m > 0.0 ? static_cast<double>(numkit::draw_poisson(rng, m * mu)) / m : spec_.y(i);
          break;
        case Family::Gamma: {
          const double shape = m / phi;
          s.y(i) = m > 0.0 ? numkit::draw_gamma(rng, shape, shape / mu) : spec_.y(i);
          break;
        }
        case Family::Gaussian:
          s.y(i) = m > 0.0 ? mu + std::sqrt(phi / m) * numkit::draw_normal(rng) : spec_.y(i);
          break;
      }
    }
    return GlmModel(std::move(s), Unchecked{});
  }

  /// Model for the fit with beta_j fixed at psi0 (column j moved to the offset).
  GlmModel constrained(Index j, double psi0) const {
    GlmSpec s = spec_;
    s.offset = spec_.offset + psi0 * spec_.X.col(j);
    Matrix X(n_obs(), n_coef() - 1);
    Index c = 0;
    for (Index u = 0; u < n_coef(); ++u)
      if (u != j) X.col(c++) = spec_.X.col(u);
    s.X = std::move(X);
    s.coef_names.erase(s.coef_names.begin() + j);
    return GlmModel(std::move(s));
  }

 private:
  struct Unchecked {};
  GlmModel(GlmSpec spec, Unchecked) : spec_(std::move(spec)) {}

  bool admissible(const Vector& theta) const {
    if (!theta.allFinite()) return false;
    if (estimates_dispersion() && !(theta(n_coef()) > 0.0)) return false;
    try {
      workspace(beta_of(theta));
    } catch (const Error&) {
      return false;
    }
    return true;
  }

  GlmSpec spec_;
};

enum class DispersionPlugin { ML, Pearson, Estimate };

inline const char* to_string(DispersionPlugin d) {
  switch (d) {
    case DispersionPlugin::ML: return "ml";
    case DispersionPlugin::Pearson: return "pearson";
    case DispersionPlugin::Estimate: return "estimate";
  }
  return "?";
}

/// Standard error of beta_j with a chosen dispersion plug-in. Estimate uses
/// the dispersion carried by the fit itself.
inline double se_with_dispersion(const GlmModel& model, const FitResult& fit, Index j, DispersionPlugin plugin) {
  if (j >= model.n_coef()) fail(ErrorKind::DomainError, "dispersion plug-ins apply to regression coefficients");
  if (fit.is_diverged(j)) fail(ErrorKind::InfiniteEstimate, "estimate for parameter " + std::to_string(j) + " is infinite");
  const Vector beta = model.beta_of(fit.theta);
  double phi = model.phi_of(fit.theta);
  if (model.estimates_dispersion()) {
    if (plugin == DispersionPlugin::ML) phi = model.ml_dispersion(beta);
    else if (plugin == DispersionPlugin::Pearson) phi = model.pearson_dispersion(beta);
  }
  const Workspace ws = model.workspace(beta);
  const Matrix inv = numkit::inverse_spd(model.xtwx(ws.w));
  return std::sqrt(phi * inv(j, j));
}

/// Plain Wald statistic for beta_j with a chosen dispersion plug-in.
inline double wald_with_dispersion(const GlmModel& model, const FitResult& fit, Index j, double psi0,
                                   DispersionPlugin plugin) {
  const double se = se_with_dispersion(model, fit, j, plugin);
  return (fit.theta(j) - psi0) / se;
}

/// sign(beta_j - psi0) sqrt(2 {l(theta_hat) - l(theta_hat_0)}), with the
/// constrained fit obtained by moving column j into the offset.
inline double signed_lr_root(const GlmModel& model, const FitResult& fit, Index j, double psi0) {
  if (fit.kind != EstimatorKind::ML) fail(ErrorKind::DomainError, "signed LR root needs the ML fit");
  if (j >= model.n_coef()) fail(ErrorKind::DomainError, "signed LR root applies to regression coefficients");
  FitResult fit0;
  try {
    fit0 = model.constrained(j, psi0).fit_ml();
  } catch (const Error& e) {
    fail(ErrorKind::ConstrainedFitFailed, std::string("constrained fit failed: ") + e.what());
  }
  if (!fit0.converged) fail(ErrorKind::ConstrainedFitFailed, "constrained fit did not converge");
  double dev = 2.0 * (fit.loglik - fit0.loglik);
  if (dev < 0.0) {
    if (dev >= -1e-10) dev = 0.0;
    else fail(ErrorKind::NegativeDeviance, "negative log-likelihood ratio " + std::to_string(dev));
  }
  const double diff = fit.theta(j) - psi0;
  return (diff > 0.0 ? 1.0 : diff < 0.0 ? -1.0 : 0.0) * std::sqrt(dev);
}

}  // namespace adjwald::glm
