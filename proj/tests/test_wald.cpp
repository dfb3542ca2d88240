#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "adjwald/datasets.hpp"
#include "adjwald/oneparam.hpp"
#include "adjwald/simbias.hpp"
#include "adjwald/wald.hpp"

using namespace adjwald;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Wald, TransformDerivativesMatchNumericDifferentiation) {
  const auto model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  for (Index j = 0; j < model.dim(); ++j) {
    const double psi0 = 0.1;
    const auto td = wald_transform_derivatives(model, fit.theta, j, psi0);
    auto T = [&](const Vector& th) { return (th(j) - psi0) / kappa(model, th, j); };
    const Vector g = numkit::num_gradient(T, fit.theta);
    const Matrix h = numkit::num_hessian(T, fit.theta);
    for (Index u = 0; u < model.dim(); ++u) {
      EXPECT_NEAR(td.gradient(u), g(u), 1e-6 * std::max(1.0, std::abs(g(u))));
      for (Index v = 0; v < model.dim(); ++v) EXPECT_NEAR(td.hessian(u, v), h(u, v), 1e-4 * std::max(1.0, std::abs(h(u, v))));
    }
  }
}

TEST(Wald, AdjustedStatisticIsAffineInTheNullValue) {
  const auto model = datasets::reading_skills_model();
  const FitResult fit = model.fit_ml();
  const auto la = location_adjustment(model, fit.theta, EstimatorKind::ML, 3);
  const double a = la.adjusted(-1.0), b = la.adjusted(0.0), c = la.adjusted(1.0);
  EXPECT_NEAR(a - b, b - c, 1e-10);
  EXPECT_LT(c, a);  // decreasing in psi
}

TEST(Wald, NumericAndAnalyticPathsAgreeOnClotting) {
  const auto model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  WaldOptions an, nu;
  an.path = DerivativePath::Analytic;
  nu.path = DerivativePath::Numeric;
  for (Index j = 0; j < model.dim(); ++j) {
    const double ba = bias_B(model, fit.theta, j, 0.0, EstimatorKind::ML, an);
    const double bn = bias_B(model, fit.theta, j, 0.0, EstimatorKind::ML, nu);
    EXPECT_LT(rel(bn, ba), 1e-5) << "j=" << j;
  }
}

TEST(Wald, RichardsonStepHalvingIsStableOnBetaRegression) {
  const auto model = datasets::reading_skills_model();
  const FitResult fit = model.fit_ml();
  WaldOptions a, b;
  b.diff.initial_step = a.diff.initial_step / 2.0;
  b.diff.hessian_step = a.diff.hessian_step / 2.0;
  for (Index j = 0; j < model.dim(); ++j) {
    const double ta = location_adjustment(model, fit.theta, EstimatorKind::ML, j, a).adjusted(0.0);
    const double tb = location_adjustment(model, fit.theta, EstimatorKind::ML, j, b).adjusted(0.0);
    EXPECT_LE(std::abs(ta - tb), 1e-4) << "j=" << j;
  }
}

TEST(Wald, AnalyticPathOnNumericOnlyModelIsRejected) {
  const auto model = datasets::reading_skills_model();
  const FitResult fit = model.fit_ml();
  WaldOptions opt;
  opt.path = DerivativePath::Analytic;
  EXPECT_THROW(location_adjustment(model, fit.theta, EstimatorKind::ML, 0, opt), Error);
}

TEST(Wald, ReportAtTheEstimateGivesZeroStatistics) {
  const auto model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  const auto report = location_adjusted_wald(model, fit, fit.theta);
  ASSERT_EQ(report.entries.size(), static_cast<std::size_t>(model.dim()));
  for (const auto& e : report.entries) {
    EXPECT_EQ(e.t, 0.0);
    EXPECT_FALSE(e.error.has_value());
    EXPECT_NEAR(e.t_star, -e.bias_B, 1e-15);
  }
}

TEST(Wald, ReportFlagsDivergedEntriesWithoutAborting) {
  const oneparam::BernoulliLogOddsModel model({12, 12});
  const FitResult fit = model.fit(EstimatorKind::ML);
  const auto report = location_adjusted_wald(model, fit, 0.0);
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_TRUE(report.entries[0].diverged);
  EXPECT_EQ(report.entries[0].t, 0.0);
  EXPECT_EQ(report.entries[0].t_star, 0.0);
}

TEST(SimulatedBias, AgreesWithClosedFormOnClotting) {
  const auto model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  const auto sim = simulate_bias(model, fit.theta, 4000, 17);
  const Vector closed = model.bias(fit.theta);
  EXPECT_EQ(sim.used + sim.failures, 4000);
  for (Index j = 0; j < model.dim(); ++j)
    EXPECT_LT(std::abs(sim.bias(j) - closed(j)), 3.0 * sim.std_error(j) + 1e-4 * std::abs(closed(j))) << "j=" << j;
}

TEST(SimulatedBias, WrapperForwardsInformationAndIsDeterministic) {
  const oneparam::ExponentialRateModel model({20, 1.3});
  const WithSimulatedBias<oneparam::ExponentialRateModel> wrapped(model, 2000, 5);
  const Vector th = Vector::Constant(1, 0.2);
  EXPECT_EQ(wrapped.info(th)(0, 0), 20.0);
  EXPECT_EQ(wrapped.bias(th)(0), wrapped.bias(th)(0));
  EXPECT_EQ(wrapped.info_derivatives(th).first.size(), 1u);
  // Exact bias of -log(ybar) is log(n) - digamma(n) = 1/(2n) + O(n^-2).
  const auto sb = simulate_bias(model, th, 2000, 5);
  EXPECT_NEAR(sb.bias(0), std::log(20.0) - numkit::digamma(20.0), 3.0 * sb.std_error(0));
}
