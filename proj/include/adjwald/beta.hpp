#pragma once

// Beta regression with a logit link for the mean and a log link for the
// precision: y_i ~ Beta(mu_i phi_i, (1 - mu_i) phi_i),
//   logit(mu_i) = x_i' beta,   log(phi_i) = z_i' gamma.
//
// Each observation is a two-parameter exponential family in
// lambda = (a, b) = (mu phi, (1 - mu) phi) with sufficient statistic
// (log y, log(1 - y)) and cumulant function
//   K(a, b) = log Gamma(a) + log Gamma(b) - log Gamma(a + b),
// so the score, expected information and first-order bias follow from the
// cumulants of K and the derivatives of lambda with respect to theta.

#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/numkit/linalg.hpp"
#include "adjwald/numkit/random.hpp"
#include "adjwald/numkit/special.hpp"
#include "adjwald/wald.hpp"

namespace adjwald::beta {

struct BetaSpec {
  Matrix X;  // mean model
  Matrix Z;  // precision model
  Vector y;
  std::vector<std::string> mean_names;
  std::vector<std::string> precision_names;

  void validate() {
    const Index n = y.size();
    if (X.rows() != n || Z.rows() != n) fail(ErrorKind::DataError, "model matrices do not match the response length");
    if (X.cols() + Z.cols() > n) fail(ErrorKind::DataError, "fewer observations than parameters");
    for (Index i = 0; i < n; ++i)
      if (!(y(i) > 0.0 && y(i) < 1.0))
        fail(ErrorKind::BoundaryResponse, "response " + std::to_string(y(i)) + " in row " + std::to_string(i + 1) +
                                              " is not inside (0, 1)");
    if (!X.allFinite() || !Z.allFinite()) fail(ErrorKind::DataError, "non-finite model matrix entries");
    for (const Matrix* m : {&X, &Z}) {
      if (m->cols() == 0) continue;
      Eigen::ColPivHouseholderQR<Matrix> qr(*m);
      if (qr.rank() < m->cols()) fail(ErrorKind::InvalidModel, "model matrix is not of full column rank");
    }
    if (mean_names.empty())
      for (Index j = 0; j < X.cols(); ++j) mean_names.push_back("beta" + std::to_string(j + 1));
    if (precision_names.empty())
      for (Index j = 0; j < Z.cols(); ++j) precision_names.push_back("gamma" + std::to_string(j + 1));
  }
};

namespace detail {

// Per-observation quantities at theta.
struct Obs {
  double mu, phi, a, b;
  double ta, tb, tab;     // trigamma(a), trigamma(b), trigamma(a + b)
  Eigen::Matrix2d dlam;   // d(a, b)/d(eta1, eta2)
  Eigen::Matrix2d sigma;  // covariance of (log y, log(1 - y))
};

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

class BetaModel {
 public:
  explicit BetaModel(BetaSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

  const BetaSpec& spec() const { return spec_; }
  Index n_obs() const { return spec_.y.size(); }
  Index n_mean() const { return spec_.X.cols(); }
  Index n_precision() const { return spec_.Z.cols(); }
  Index dim() const { return n_mean() + n_precision(); }

  std::vector<std::string> parameter_names() const {
    auto names = spec_.mean_names;
    names.insert(names.end(), spec_.precision_names.begin(), spec_.precision_names.end());
    return names;
  }

  double log_likelihood(const Vector& theta) const {
    double s = 0.0;
    for (Index i = 0; i < n_obs(); ++i) {
      const auto [mu, phi] = mean_precision(theta, i);
      const double a = mu * phi, b = (1.0 - mu) * phi;
      s += std::lgamma(phi) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(spec_.y(i)) +
           (b - 1.0) * std::log1p(-spec_.y(i));
    }
    return s;
  }

  Vector score(const Vector& theta) const {
    Vector u = Vector::Zero(dim());
    for (Index i = 0; i < n_obs(); ++i) {
      const detail::Obs o = observation(theta, i, false);
      const double dab = numkit::digamma(o.a + o.b);
      const Eigen::Vector2d resid(std::log(spec_.y(i)) - numkit::digamma(o.a) + dab,
                                  std::log1p(-spec_.y(i)) - numkit::digamma(o.b) + dab);
      accumulate_g(u, i, o.dlam.transpose() * resid);
    }
    return u;
  }

  Matrix info(const Vector& theta) const {
    Matrix out = Matrix::Zero(dim(), dim());
    for (Index i = 0; i < n_obs(); ++i) {
      const detail::Obs o = observation(theta, i, true);
      const Eigen::Matrix2d m = o.dlam.transpose() * o.sigma * o.dlam;
      add_gmg(out, i, m);
    }
    return 0.5 * (out + out.transpose());
  }

  /// First-order bias of the ML estimator, b = J v / 2 with J = i^-1 and
  ///   v_s = -sum_i lambda_s' {Sigma S_i + q_i},
  ///   S_i = sum_tu J_tu lambda_tu,   q_i,a = sum_bc K3_abc N_bc,   N = sum_tu J_tu lambda_t lambda_u'.
  Vector bias(const Vector& theta) const {
    const Matrix J = numkit::inverse_spd(info(theta));
    Vector v = Vector::Zero(dim());
    for (Index i = 0; i < n_obs(); ++i) {
      const detail::Obs o = observation(theta, i, true);
      const Eigen::Matrix2d M = gjg(J, i);
      // Second derivatives of (a, b) in (eta1, eta2).
      const double m1 = o.mu * (1.0 - o.mu);
      Eigen::Matrix2d a2, b2;
      a2 << o.phi * m1 * (1.0 - 2.0 * o.mu), o.phi * m1, o.phi * m1, o.mu * o.phi;
      b2 << -o.phi * m1 * (1.0 - 2.0 * o.mu), -o.phi * m1, -o.phi * m1, (1.0 - o.mu) * o.phi;
      const Eigen::Vector2d S((a2.cwiseProduct(M)).sum(), (b2.cwiseProduct(M)).sum());
      const Eigen::Matrix2d N = o.dlam * M * o.dlam.transpose();
      const double pab = numkit::polygamma(2, o.a + o.b);
      const double kaaa = numkit::polygamma(2, o.a) - pab;
      const double kbbb = numkit::polygamma(2, o.b) - pab;
      // Mixed third cumulants all equal -psi''(a + b).
      const Eigen::Vector2d q(kaaa * N(0, 0) - pab * (2.0 * N(0, 1) + N(1, 1)),
                              kbbb * N(1, 1) - pab * (2.0 * N(0, 1) + N(0, 0)));
      accumulate_g(v, i, -(o.dlam.transpose() * (o.sigma * S + q)));
    }
    return 0.5 * J * v;
  }

  FitResult fit_ml(int max_iter = 200) const {
    Vector theta = start();
    FitResult r;
    r.kind = EstimatorKind::ML;
    r.diverged.assign(static_cast<std::size_t>(dim()), false);
    double ll = log_likelihood(theta);
    for (int it = 1; it <= max_iter; ++it) {
      r.iterations = it;
      const Vector u = score(theta);
      r.score_norm = u.cwiseAbs().maxCoeff();
      if (r.score_norm <= 1e-8 * (1.0 + std::fabs(ll))) {
        r.converged = true;
        break;
      }
      Vector step = numkit::solve_spd(info(theta), u);
      Vector cand = theta + step;
      double cll = safe_loglik(cand);
      for (int half = 0; half < 40 && !(cll >= ll - 1e-12 * std::fabs(ll)); ++half) {
        step *= 0.5;
        cand = theta + step;
        cll = safe_loglik(cand);
      }
      if (!std::isfinite(cll)) break;
      theta = cand;
      ll = cll;
      if (step.cwiseAbs().maxCoeff() <= 1e-10) {
        r.converged = true;
        r.score_norm = score(theta).cwiseAbs().maxCoeff();
        break;
      }
    }
    if (!r.converged) fail(ErrorKind::DidNotConverge, "beta regression scoring did not converge");
    r.theta = theta;
    r.loglik = ll;
    return r;
  }

  /// Iterated bias correction from the ML fit: theta <- theta + i^-1 U - b.
  FitResult fit_rb(int max_iter = 200) const {
    Vector theta = fit_ml().theta;
    FitResult r;
    r.kind = EstimatorKind::RB;
    r.diverged.assign(static_cast<std::size_t>(dim()), false);
    for (int it = 1; it <= max_iter; ++it) {
      r.iterations = it;
      Vector step = numkit::solve_spd(info(theta), score(theta)) - bias(theta);
      Vector cand = theta + step;
      for (int half = 0; half < 40 && !std::isfinite(safe_loglik(cand)); ++half) {
        step *= 0.5;
        cand = theta + step;
      }
      theta = cand;
      if (step.cwiseAbs().maxCoeff() <= 1e-8) {
        r.converged = true;
        break;
      }
    }
    if (!r.converged) fail(ErrorKind::DidNotConverge, "reduced-bias iteration did not converge");
    r.theta = theta;
    r.loglik = log_likelihood(theta);
    r.score_norm = (score(theta) - info(theta) * bias(theta)).cwiseAbs().maxCoeff();
    return r;
  }

  FitResult fit(EstimatorKind kind) const { return kind == EstimatorKind::ML ? fit_ml() : fit_rb(); }

  /// Responses drawn from the fitted model. A draw that rounds to 0 or 1
  /// raises BoundaryResponse.
  BetaModel simulate(const Vector& theta, numkit::RngStream& rng) const {
    BetaSpec s = spec_;
    for (Index i = 0; i < n_obs(); ++i) {
      const auto [mu, phi] = mean_precision(theta, i);
      s.y(i) = numkit::draw_beta(rng, mu * phi, (1.0 - mu) * phi);
    }
    return BetaModel(std::move(s));
  }

  std::pair<double, double> mean_precision(const Vector& theta, Index i) const {
    const double eta1 = spec_.X.row(i).dot(theta.head(n_mean()));
    const double eta2 = spec_.Z.row(i).dot(theta.tail(n_precision()));
    return {detail::expit(eta1), std::exp(eta2)};
  }

 private:
  detail::Obs observation(const Vector& theta, Index i, bool with_sigma) const {
    detail::Obs o;
    std::tie(o.mu, o.phi) = mean_precision(theta, i);
    o.a = o.mu * o.phi;
    o.b = (1.0 - o.mu) * o.phi;
    if (!(o.a > 0.0 && o.b > 0.0 && std::isfinite(o.phi)))
      fail(ErrorKind::NonFiniteEvaluation, "beta parameters out of range at observation " + std::to_string(i + 1));
    const double m1 = o.mu * (1.0 - o.mu);
    o.dlam << o.phi * m1, o.a, -o.phi * m1, o.b;
    if (with_sigma) {
      o.ta = numkit::trigamma(o.a);
      o.tb = numkit::trigamma(o.b);
      o.tab = numkit::trigamma(o.a + o.b);
      o.sigma << o.ta - o.tab, -o.tab, -o.tab, o.tb - o.tab;
    }
    return o;
  }

  // out += G_i' v where G_i = [x_i' 0; 0 z_i'].
  void accumulate_g(Vector& out, Index i, const Eigen::Vector2d& v) const {
    out.head(n_mean()) += v(0) * spec_.X.row(i).transpose();
    out.tail(n_precision()) += v(1) * spec_.Z.row(i).transpose();
  }

  // out += G_i' m G_i
  void add_gmg(Matrix& out, Index i, const Eigen::Matrix2d& m) const {
    const Index k1 = n_mean(), k2 = n_precision();
    const auto x = spec_.X.row(i).transpose();
    const auto z = spec_.Z.row(i).transpose();
    out.topLeftCorner(k1, k1).noalias() += m(0, 0) * x * x.transpose();
    out.topRightCorner(k1, k2).noalias() += m(0, 1) * x * z.transpose();
    out.bottomLeftCorner(k2, k1).noalias() += m(1, 0) * z * x.transpose();
    out.bottomRightCorner(k2, k2).noalias() += m(1, 1) * z * z.transpose();
  }

  // G_i J G_i'
  Eigen::Matrix2d gjg(const Matrix& J, Index i) const {
    const Index k1 = n_mean(), k2 = n_precision();
    const Vector x = spec_.X.row(i).transpose();
    const Vector z = spec_.Z.row(i).transpose();
    Eigen::Matrix2d m;
    m(0, 0) = x.dot(J.topLeftCorner(k1, k1) * x);
    m(0, 1) = x.dot(J.topRightCorner(k1, k2) * z);
    m(1, 0) = m(0, 1);
    m(1, 1) = z.dot(J.bottomRightCorner(k2, k2) * z);
    return m;
  }

  double safe_loglik(const Vector& theta) const {
    if (!theta.allFinite()) return -std::numeric_limits<double>::infinity();
    const double ll = log_likelihood(theta);
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
  }

  // Mean coefficients from least squares on logit(y); precision from the
  // moment relation var(y) = mu (1 - mu) / (1 + phi) at a constant phi.
  Vector start() const {
    const Index n = n_obs();
    Vector ly(n);
    for (Index i = 0; i < n; ++i) ly(i) = std::log(spec_.y(i) / (1.0 - spec_.y(i)));
    Vector theta = Vector::Zero(dim());
    theta.head(n_mean()) = spec_.X.colPivHouseholderQr().solve(ly);
    double ss = 0.0, mv = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double mu = detail::expit(spec_.X.row(i).dot(theta.head(n_mean())));
      ss += (spec_.y(i) - mu) * (spec_.y(i) - mu);
      mv += mu * (1.0 - mu);
    }
    const double dof = static_cast<double>(std::max<Index>(1, n - n_mean()));
    const double phi0 = std::max(1.0, (mv / static_cast<double>(n)) / (ss / dof) - 1.0);
    if (n_precision() > 0)
      theta.tail(n_precision()) = spec_.Z.colPivHouseholderQr().solve(Vector::Constant(n, std::log(phi0)));
    return theta;
  }

  BetaSpec spec_;
};

}  // namespace adjwald::beta
