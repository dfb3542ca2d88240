#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "adjwald/datasets.hpp"
#include "adjwald/inference.hpp"
#include "adjwald/oneparam.hpp"

using namespace adjwald;
using namespace adjwald::inference;

namespace {

// Normal location model with unit variance whose refits fail on roughly
// half of the simulated samples.
class FlakyModel {
 public:
  explicit FlakyModel(double draw = 0.0, double u = 1.0) : draw_(draw), u_(u) {}
  Index dim() const { return 1; }
  Matrix info(const Vector&) const { return Matrix::Identity(1, 1); }
  Vector bias(const Vector&) const { return Vector::Zero(1); }
  FlakyModel simulate(const Vector& theta, numkit::RngStream& rng) const {
    const double z = numkit::draw_normal(rng);
    return FlakyModel(theta(0) + z, rng.uniform());
  }
  FitResult fit(EstimatorKind kind) const {
    if (u_ < 0.5) fail(ErrorKind::DidNotConverge, "toy refit failure");
    FitResult r;
    r.kind = kind;
    r.converged = true;
    r.theta = Vector::Constant(1, draw_);
    r.diverged.assign(1, false);
    return r;
  }

 private:
  double draw_;
  double u_;
};

}  // namespace

TEST(PValue, NormalReference) {
  EXPECT_DOUBLE_EQ(p_value(0.0), 1.0);
  EXPECT_NEAR(p_value(1.9257), 0.0541, 5e-5);
  EXPECT_NEAR(p_value(-1.9064), 0.0566, 5e-5);
  EXPECT_NEAR(p_value(1.3, Alternative::Less) + p_value(1.3, Alternative::Greater), 1.0, 1e-15);
  EXPECT_NEAR(p_value(1.959963984540054, Alternative::Greater), 0.025, 1e-12);
  EXPECT_THROW(p_value(std::nan("")), Error);
}

TEST(PValue, BootstrapReferenceCountsTheObservedValue) {
  const std::vector<double> reps = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_DOUBLE_EQ(p_value(7.5, reps, Alternative::Greater), 3.0 / 10.0);
  EXPECT_DOUBLE_EQ(p_value(7.5, reps, Alternative::Less), 8.0 / 10.0);
  EXPECT_DOUBLE_EQ(p_value(7.5, reps, Alternative::TwoSided), 6.0 / 10.0);
  EXPECT_DOUBLE_EQ(p_value(100.0, reps, Alternative::Greater), 1.0 / 10.0);
}

TEST(Quantile, PlottingPositionAndDegenerateSamples) {
  EXPECT_DOUBLE_EQ(empirical_quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(empirical_quantile({4, 1, 3, 2}, 0.01), 1.0);
  EXPECT_DOUBLE_EQ(empirical_quantile({4, 1, 3, 2}, 0.99), 4.0);
  EXPECT_DOUBLE_EQ(empirical_quantile(std::vector<double>(50, 1.5), 0.025), 1.5);
  EXPECT_THROW(empirical_quantile({}, 0.5), Error);
  auto stat = [](double psi) { return -psi; };
  EXPECT_THROW(invert_statistic(stat, 0.0, 1.0, 1.0, -1.0, 0.95, GridSpec{}, IntervalMethod::NormalQuantile), Error);
}

TEST(Intervals, PlainWaldInversionIsEstimatePlusMinusZSe) {
  const auto model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  for (double level : {0.9, 0.95, 0.99}) {
    const double z = numkit::normal_quantile(0.5 + 0.5 * level);
    for (Index j = 0; j < model.dim(); ++j) {
      const IntervalEstimate ci = invert_ci(model, fit, j, level, StatisticFamily::T);
      const double se = kappa(model, fit.theta, j);
      EXPECT_NEAR(ci.lower, fit.theta(j) - z * se, 1e-10 * (1 + std::abs(fit.theta(j))));
      EXPECT_NEAR(ci.upper, fit.theta(j) + z * se, 1e-10 * (1 + std::abs(fit.theta(j))));
      EXPECT_EQ(ci.widenings, 0);
      EXPECT_FALSE(ci.multiple_crossings);
    }
  }
}

TEST(Intervals, AdjustedIntervalsAreNested) {
  const auto model = datasets::reading_skills_model();
  const FitResult fit = model.fit_ml();
  for (Index j = 0; j < model.dim(); ++j) {
    const auto a = invert_ci(model, fit, j, 0.90, StatisticFamily::TStar);
    const auto b = invert_ci(model, fit, j, 0.95, StatisticFamily::TStar);
    const auto c = invert_ci(model, fit, j, 0.99, StatisticFamily::TStar);
    EXPECT_LT(b.lower, a.lower);
    EXPECT_LT(c.lower, b.lower);
    EXPECT_GT(b.upper, a.upper);
    EXPECT_GT(c.upper, b.upper);
  }
}

TEST(Intervals, ExponentialAdjustedIntervalIsShifted) {
  const long n = 16;
  const oneparam::ExponentialRateModel model({n, 0.8});
  const FitResult fit = model.fit(EstimatorKind::ML);
  const auto t = invert_ci(model, fit, 0, 0.95, StatisticFamily::T);
  const auto ts = invert_ci(model, fit, 0, 0.95, StatisticFamily::TStar);
  EXPECT_NEAR(ts.lower - t.lower, -0.5 / n, 1e-10);
  EXPECT_NEAR(ts.upper - t.upper, -0.5 / n, 1e-10);
}

TEST(Intervals, ReadingSkillsNormalQuantileIntervals) {
  const auto model = datasets::reading_skills_model();
  const FitResult ml = model.fit_ml(), rb = model.fit_rb();
  struct Row {
    Index j;
    double star_lo, star_hi, tilde_lo, tilde_hi;
  };
  const Row rows[] = {{1, -1.019, -0.435, -1.031, -0.446},
                      {2, 0.204, 0.752, 0.165, 0.719},
                      {3, -0.845, -0.299, -0.809, -0.257},
                      {5, 1.186, 2.214, 1.134, 2.169},
                      {6, 0.639, 1.691, 0.513, 1.574}};
  for (const Row& r : rows) {
    const auto a = invert_ci(model, ml, r.j, 0.95, StatisticFamily::TStar);
    const auto b = invert_ci(model, rb, r.j, 0.95, StatisticFamily::TTildeStar);
    EXPECT_NEAR(a.lower, r.star_lo, 5e-3) << r.j;
    EXPECT_NEAR(a.upper, r.star_hi, 5e-3) << r.j;
    EXPECT_NEAR(b.lower, r.tilde_lo, 5e-3) << r.j;
    EXPECT_NEAR(b.upper, r.tilde_hi, 5e-3) << r.j;
  }
}

TEST(Intervals, GridThatCannotReachTheQuantilesIsReported) {
  auto bounded = [](double psi) { return std::atan(-psi); };
  GridSpec grid;
  grid.max_widenings = 2;
  try {
    invert_statistic(bounded, 0.0, 1.0, -1.96, 1.96, 0.95, grid, IntervalMethod::NormalQuantile);
    FAIL() << "expected GridTooNarrow";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridTooNarrow);
  }
  // A grid that is too narrow at first is widened automatically.
  GridSpec narrow;
  narrow.half_width_se = 0.5;
  const auto ci = invert_statistic([](double psi) { return -psi; }, 0.0, 1.0, -1.96, 1.96, 0.95, narrow,
                                   IntervalMethod::NormalQuantile);
  EXPECT_EQ(ci.widenings, 2);
  EXPECT_NEAR(ci.lower, -1.96, 1e-12);
  EXPECT_NEAR(ci.upper, 1.96, 1e-12);
}

TEST(Bootstrap, StudentizedIntervalIsDeterministicAndThreadInvariant) {
  const auto model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  BootstrapPlan plan;
  plan.replicates = 199;
  plan.seed = 5;
  const auto a = studentized_bootstrap_ci(model, fit, 3, 0.95, plan);
  const auto b = studentized_bootstrap_ci(model, fit, 3, 0.95, plan);
  plan.threads = 3;
  const auto c = studentized_bootstrap_ci(model, fit, 3, 0.95, plan);
  EXPECT_EQ(a.interval.lower, b.interval.lower);
  EXPECT_EQ(a.interval.upper, b.interval.upper);
  EXPECT_EQ(a.interval.lower, c.interval.lower);
  EXPECT_EQ(a.interval.upper, c.interval.upper);
  EXPECT_LT(a.lower_quantile, a.upper_quantile);
  EXPECT_EQ(a.interval.method, IntervalMethod::StudentizedBootstrap);
}

TEST(Bootstrap, ReadingSkillsStudentizedIntervalWithinBootstrapNoise) {
  const auto model = datasets::reading_skills_model();
  const FitResult rb = model.fit_rb();
  BootstrapPlan plan;
  plan.replicates = 500;
  plan.seed = 1;
  plan.family = StatisticFamily::TTildeStar;
  const auto ci = studentized_bootstrap_ci(model, rb, 6, 0.95, plan);
  EXPECT_NEAR(ci.interval.lower, 0.394, 0.15);
  EXPECT_NEAR(ci.interval.upper, 1.769, 0.15);
}

TEST(Bootstrap, ScaleAdjustmentDividesByTheBootstrapSd) {
  BootstrapSample unit;
  unit.values = {-1.0, 1.0, -1.0, 1.0};  // sd = 2/sqrt(3)
  const double sd = 2.0 / std::sqrt(3.0);
  BootstrapSample scaled = unit;
  for (double& v : scaled.values) v /= sd;
  EXPECT_NEAR(scale_adjust(1.7, scaled).scaled, 1.7, 1e-12);
  EXPECT_NEAR(scale_adjust(-1.7, scaled).scaled, -1.7, 1e-12);
  EXPECT_NEAR(scale_adjust(-1.7, unit).scaled, -1.7 / sd, 1e-12);
  BootstrapSample flat;
  flat.values = std::vector<double>(10, 0.3);
  EXPECT_THROW(scale_adjust(1.0, flat), Error);
}

TEST(Bootstrap, BootstrapSdIsStableAcrossReplicateCounts) {
  const auto model = datasets::clotting_model();
  const FitResult fit = model.fit_ml();
  BootstrapPlan plan;
  plan.purpose = BootstrapPurpose::Variance;
  plan.seed = 8;
  plan.replicates = 200;
  const auto small = scale_adjusted_statistic(model, fit, 3, 0.0, plan);
  plan.replicates = 500;
  const auto large = scale_adjusted_statistic(model, fit, 3, 0.0, plan);
  EXPECT_NEAR(small.bootstrap_sd / large.bootstrap_sd, 1.0, 0.15);
  EXPECT_EQ(small.statistic, large.statistic);
  EXPECT_NEAR(large.scaled, large.statistic / large.bootstrap_sd, 1e-12);
}

TEST(Bootstrap, PlansBelowTheMinimumSizeAreRejected) {
  BootstrapPlan plan;
  plan.replicates = 100;
  EXPECT_THROW(plan.validate(), Error);
  plan.purpose = BootstrapPurpose::Variance;
  EXPECT_NO_THROW(plan.validate());
  plan.replicates = 49;
  EXPECT_THROW(plan.validate(), Error);
}

TEST(Bootstrap, TooManyRefitFailuresAbort) {
  const FlakyModel model;
  FitResult fit = model.fit(EstimatorKind::ML);
  BootstrapPlan plan;
  plan.replicates = 200;
  try {
    bootstrap_statistic(model, fit, 0, plan);
    FAIL() << "expected RefitFailures";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RefitFailures);
  }
  plan.max_failure_fraction = 0.9;
  const BootstrapSample s = bootstrap_statistic(model, fit, 0, plan);
  EXPECT_EQ(s.requested, 200);
  EXPECT_EQ(static_cast<int>(s.values.size()) + s.failures, 200);
  EXPECT_GT(s.failures, 60);
}
