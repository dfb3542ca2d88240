#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "adjwald/datasets.hpp"
#include "adjwald/glm/model.hpp"
#include "adjwald/numkit/special.hpp"
#include "adjwald/simbias.hpp"
#include "oracles.hpp"

using namespace adjwald;
using adjwald::glm::FamilyLink;
using adjwald::glm::GlmModel;
using adjwald::glm::GlmSpec;

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Deterministic covariates on a lattice so fixtures need no RNG.
Matrix lattice_design(Index n, Index k) {
  Matrix X(n, k);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Index j = 1; j < k; ++j) X(i, j) = std::sin(1.3 * static_cast<double>((i + 1) * j)) + 0.1 * static_cast<double>(j);
  }
  return X;
}

GlmModel logistic_fixture(Index n, const Vector& beta, std::uint64_t seed) {
  GlmSpec s;
  s.family = FamilyLink::parse("binomial-logit");
  s.X = lattice_design(n, beta.size());
  s.y = Vector::Zero(n);
  numkit::RngStream rng(seed, 0);
  for (Index i = 0; i < n; ++i) s.y(i) = numkit::draw_bernoulli(rng, expit(s.X.row(i).dot(beta)));
  return GlmModel(std::move(s));
}

GlmModel family_fixture(const std::string& family) {
  GlmSpec s;
  s.family = FamilyLink::parse(family);
  const Index n = 40;
  s.X = lattice_design(n, 3);
  s.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double eta = 0.3 + 0.4 * s.X(i, 1) - 0.2 * s.X(i, 2);
    if (family == "binomial-logit" || family == "binomial-probit") s.y(i) = (i % 3 == 0) != (eta > 0.4) ? 1.0 : 0.0;
    else if (family == "poisson-log") s.y(i) = static_cast<double>((i * 7) % 5);
    else if (family == "gamma-log") s.y(i) = std::exp(eta) * (0.6 + 0.05 * static_cast<double>(i % 17));
    else s.y(i) = eta + 0.2 * std::cos(static_cast<double>(i));
  }
  return GlmModel(std::move(s));
}

// E_theta0 l(theta) for a gamma log-link GLM with unit prior weights.
oracle::ExpectedLoglik gamma_expected_loglik(const Matrix& X) {
  return [X](const Vector& th, const Vector& th0) {
    const Index k = X.cols();
    const double nu = 1.0 / th(k), nu0 = 1.0 / th0(k);
    double q = 0.0;
    for (Index i = 0; i < X.rows(); ++i) {
      const double mu = std::exp(X.row(i).dot(th.head(k)));
      const double mu0 = std::exp(X.row(i).dot(th0.head(k)));
      const double elog = numkit::digamma(nu0) + std::log(mu0 / nu0);
      q += nu * std::log(nu) - std::lgamma(nu) - nu * std::log(mu) - nu * mu0 / mu + nu * elog;
    }
    return q;
  };
}

oracle::ExpectedLoglik logistic_expected_loglik(const Matrix& X) {
  return [X](const Vector& b, const Vector& b0) {
    double q = 0.0;
    for (Index i = 0; i < X.rows(); ++i) {
      const double eta = X.row(i).dot(b);
      q += expit(X.row(i).dot(b0)) * eta - std::log1p(std::exp(eta));
    }
    return q;
  };
}

void expect_close(const Vector& got, const Vector& want, double rel, const std::string& what) {
  ASSERT_EQ(got.size(), want.size());
  for (Index j = 0; j < got.size(); ++j)
    EXPECT_NEAR(got(j), want(j), rel * std::max(std::abs(want(j)), 1e-3)) << what << " component " << j;
}

}  // namespace

TEST(Glm, GaussianIdentityReducesToLeastSquares) {
  const GlmModel model = family_fixture("gaussian-identity");
  const Matrix& X = model.spec().X;
  const Vector& y = model.spec().y;
  const Vector ols = X.colPivHouseholderQr().solve(y);
  const double rss = (y - X * ols).squaredNorm();
  const Index n = X.rows(), k = X.cols();

  const FitResult ml = model.fit_ml();
  ASSERT_TRUE(ml.converged);
  for (Index j = 0; j < k; ++j) EXPECT_NEAR(ml.theta(j), ols(j), 1e-10);
  EXPECT_NEAR(ml.theta(k), rss / n, 1e-12);

  const Vector b = model.bias(ml.theta);
  for (Index j = 0; j < k; ++j) EXPECT_NEAR(b(j), 0.0, 1e-14);
  EXPECT_NEAR(b(k), -static_cast<double>(k) * ml.theta(k) / n, 1e-12);

  // Iterated bias correction lands on the unbiased residual variance.
  const FitResult rb = model.fit_rb();
  for (Index j = 0; j < k; ++j) EXPECT_NEAR(rb.theta(j), ols(j), 1e-9);
  EXPECT_NEAR(rb.theta(k), rss / (n - k), 1e-9);
}

TEST(Glm, InterceptOnlyLogisticMatchesClosedForms) {
  GlmSpec s;
  s.family = FamilyLink::parse("binomial-logit");
  const Index n = 32;
  s.X = Matrix::Ones(n, 1);
  s.y = Vector::Zero(n);
  for (Index i = 0; i < 28; ++i) s.y(i) = 1.0;
  const GlmModel model(std::move(s));
  const FitResult fit = model.fit_ml();
  EXPECT_NEAR(fit.theta(0), std::log(28.0 / 4.0), 1e-10);

  for (double theta : {-1.5, 0.0, 0.7, 2.0}) {
    const double pi = expit(theta);
    const Vector th = Vector::Constant(1, theta);
    EXPECT_NEAR(model.info(th)(0, 0), n * pi * (1 - pi), 1e-12);
    // b = -i'/(2 i^2) for a one-parameter canonical family.
    EXPECT_NEAR(model.bias(th)(0), (2 * pi - 1) / (2.0 * n * pi * (1 - pi)), 1e-12);
  }
}

TEST(Glm, InformationMatchesHandComputationAtZero) {
  GlmSpec s;
  s.family = FamilyLink::parse("binomial-logit");
  s.X.resize(2, 2);
  s.X << 1, 0, 1, 1;
  s.y = Vector::Zero(2);
  s.y(1) = 1.0;
  const GlmModel model(std::move(s));
  Matrix expected(2, 2);
  expected << 0.5, 0.25, 0.25, 0.25;
  EXPECT_LT((model.info(Vector::Zero(2)) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

class GlmFamilies : public ::testing::TestWithParam<std::string> {};

TEST_P(GlmFamilies, InfoDerivativesMatchNumericDifferentiation) {
  const GlmModel model = family_fixture(GetParam());
  const FitResult fit = model.fit_ml();
  ASSERT_TRUE(fit.converged);
  const Index p = model.dim();
  const InfoDerivatives d = model.info_derivatives(fit.theta);
  auto info_fn = [&](const Vector& t) { return model.info(t); };
  for (Index u = 0; u < p; ++u) {
    const Matrix num = oracle::partial(info_fn, fit.theta, u, 1e-3);
    const Matrix& an = d.first[static_cast<std::size_t>(u)];
    const double scale = std::max(1.0, num.cwiseAbs().maxCoeff());
    EXPECT_LT((an - num).cwiseAbs().maxCoeff() / scale, 1e-5) << "first derivative, u=" << u;
    auto du = [&](const Vector& t) { return Matrix(model.info_derivatives(t).first[static_cast<std::size_t>(u)]); };
    for (Index v = 0; v < p; ++v) {
      const Matrix num2 = oracle::partial(du, fit.theta, v, 1e-3);
      const Matrix& an2 = d.second_at(u, v);
      const double scale2 = std::max(1.0, num2.cwiseAbs().maxCoeff());
      EXPECT_LT((an2 - num2).cwiseAbs().maxCoeff() / scale2, 1e-5) << "second derivative, u=" << u << " v=" << v;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, GlmFamilies,
                         ::testing::Values("binomial-logit", "binomial-probit", "poisson-log", "gamma-log",
                                           "gaussian-identity"),
                         [](const auto& info) {
                           std::string s = info.param;
                           for (char& c : s)
                             if (c == '-') c = '_';
                           return s;
                         });

TEST(Glm, ClottingEstimatesAndDispersions) {
  const GlmModel model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  ASSERT_TRUE(fit.converged);
  const double want[] = {5.503, -0.602, -0.584, 0.034};
  for (Index j = 0; j < 4; ++j) EXPECT_NEAR(fit.theta(j), want[j], 5e-4) << "beta" << j + 1;
  EXPECT_NEAR(fit.theta(4), 0.017, 5e-4);
  EXPECT_NEAR(model.pearson_dispersion(model.beta_of(fit.theta)), 0.024, 5e-4);
}

TEST(Glm, ClottingInformationAndBiasMatchExpectedLoglikOracle) {
  const GlmModel model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  const auto Q = gamma_expected_loglik(model.spec().X);
  const Matrix info = model.info(fit.theta);
  const Matrix want = oracle::info(Q, fit.theta);
  EXPECT_LT((info - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff(), 1e-6);
  expect_close(model.bias(fit.theta), oracle::cox_snell_bias(Q, fit.theta), 1e-4, "clotting bias");
}

TEST(Glm, LogisticBiasMatchesExpectedLoglikOracle) {
  Vector beta(4);
  beta << 0.5, -0.5, 0.3, 0.2;
  const GlmModel model = logistic_fixture(60, beta, 3);
  const auto Q = logistic_expected_loglik(model.spec().X);
  expect_close(model.bias(beta), oracle::cox_snell_bias(Q, beta), 1e-4, "logistic bias");
}

TEST(Glm, LogisticBiasMatchesSimulation) {
  Vector beta(4);
  beta << 0.5, -0.5, 0.3, 0.2;
  const GlmModel model = logistic_fixture(200, beta, 5);
  const SimulatedBias sim = simulate_bias(model, beta, 100000, 11);
  const Vector b = model.bias(beta);
  ASSERT_GT(sim.used, 99000);
  for (Index j = 0; j < 4; ++j)
    EXPECT_LT(std::abs(sim.bias(j) - b(j)), 3.0 * sim.std_error(j)) << "beta" << j + 1 << " simulated " << sim.bias(j)
                                                                   << " closed form " << b(j);
}

TEST(Glm, ReducedBiasFitIsFiniteUnderSeparation) {
  GlmSpec s;
  s.family = FamilyLink::parse("binomial-logit");
  const Index n = 12;
  s.X.resize(n, 2);
  s.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    s.X(i, 0) = 1.0;
    s.X(i, 1) = static_cast<double>(i) - 5.5;
    s.y(i) = i >= 6 ? 1.0 : 0.0;
  }
  const GlmModel model(std::move(s));
  const FitResult ml = model.fit_ml();
  EXPECT_TRUE(ml.is_diverged(1));
  const FitResult rb = model.fit_rb();
  ASSERT_TRUE(rb.converged);
  EXPECT_TRUE(rb.theta.allFinite());
  EXPECT_GT(rb.theta(1), 0.0);
  EXPECT_LT(rb.theta(1), 10.0);
}

TEST(Glm, RankDeficientDesignIsRejected) {
  GlmSpec s;
  s.family = FamilyLink::parse("poisson-log");
  s.X.resize(5, 2);
  s.X.col(0).setOnes();
  s.X.col(1).setConstant(2.0);
  s.y = Vector::Ones(5);
  try {
    GlmModel m(std::move(s));
    FAIL() << "expected InvalidModel";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidModel);
  }
}

TEST(Glm, SignedRootMatchesWaldForGaussianWithKnownVariance) {
  GlmSpec s;
  s.family = FamilyLink::parse("gaussian-identity");
  const Index n = 30;
  s.X = lattice_design(n, 2);
  s.y.resize(n);
  for (Index i = 0; i < n; ++i) s.y(i) = 1.0 + 0.5 * s.X(i, 1) + 0.3 * std::cos(2.0 * static_cast<double>(i));
  s.dispersion = 0.09;
  const GlmModel model(std::move(s));
  const FitResult fit = model.fit_ml();
  // Quadratic log-likelihood: r and t coincide exactly.
  EXPECT_NEAR(glm::signed_lr_root(model, fit, 1, 0.2), wald_statistic(model, fit, 1, 0.2), 1e-8);
}
