#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "adjwald/error.hpp"
#include "adjwald/numkit/linalg.hpp"
#include "adjwald/numkit/numdiff.hpp"
#include "adjwald/numkit/random.hpp"
#include "adjwald/numkit/special.hpp"
#include "adjwald/parallel.hpp"

using namespace adjwald;
using namespace adjwald::numkit;

namespace {
constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kZeta3 = 1.2020569031595942854;
}  // namespace

TEST(Special, DigammaAtHalfIntegersMatchesClosedForm) {
  // psi(n + 1/2) = -gamma - 2 log 2 + sum_{k=1}^n 2 / (2k - 1)
  double sum = 0.0;
  for (int n = 0; n <= 40; ++n) {
    if (n > 0) sum += 2.0 / (2.0 * n - 1.0);
    const double expected = -kEulerGamma - 2.0 * std::log(2.0) + sum;
    EXPECT_NEAR(digamma(n + 0.5), expected, 1e-12 * std::max(1.0, std::abs(expected))) << "n=" << n;
  }
}

TEST(Special, DigammaAtIntegersIsHarmonic) {
  double h = 0.0;
  for (int n = 1; n <= 60; ++n) {
    EXPECT_NEAR(digamma(n), -kEulerGamma + h, 1e-12) << "n=" << n;
    h += 1.0 / n;
  }
}

TEST(Special, TrigammaKnownValues) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  EXPECT_NEAR(trigamma(1.0), pi2 / 6.0, 1e-13);
  EXPECT_NEAR(trigamma(0.5), pi2 / 2.0, 1e-12);
  double s = 0.0;
  for (int n = 1; n <= 30; ++n) {
    s += 1.0 / ((2.0 * n - 1.0) * (2.0 * n - 1.0));
    EXPECT_NEAR(trigamma(n + 0.5), pi2 / 2.0 - 4.0 * s, 1e-12) << "n=" << n;
  }
}

TEST(Special, HigherPolygammaKnownValues) {
  const double pi4 = std::pow(std::numbers::pi, 4);
  EXPECT_NEAR(polygamma(2, 1.0), -2.0 * kZeta3, 1e-12);
  EXPECT_NEAR(polygamma(3, 1.0), pi4 / 15.0, 1e-11);
}

TEST(Special, RecurrenceHoldsAcrossTheAsymptoticThreshold) {
  for (double x : {0.013, 0.37, 1.9, 7.25, 14.6, 15.2, 33.0, 250.0}) {
    EXPECT_NEAR(digamma(x + 1.0), digamma(x) + 1.0 / x, 1e-11 * std::max(1.0, 1.0 / x));
    EXPECT_NEAR(trigamma(x + 1.0), trigamma(x) - 1.0 / (x * x), 1e-11 * std::max(1.0, 1.0 / (x * x)));
    EXPECT_NEAR(polygamma(2, x + 1.0), polygamma(2, x) + 2.0 / (x * x * x), 1e-10 * std::max(1.0, 1.0 / (x * x * x)));
    EXPECT_NEAR(polygamma(3, x + 1.0), polygamma(3, x) - 6.0 / std::pow(x, 4), 1e-9 * std::max(1.0, std::pow(x, -4)));
  }
}

TEST(Special, LogGammaMatchesStandardLibrary) {
  for (double x : {0.1, 0.5, 1.0, 2.5, 10.0, 171.3, 1e4}) EXPECT_NEAR(log_gamma(x), std::lgamma(x), 1e-10 * std::max(1.0, std::abs(std::lgamma(x))));
}

TEST(Special, RejectsNonPositiveArguments) {
  EXPECT_THROW(digamma(0.0), Error);
  EXPECT_THROW(trigamma(-1.0), Error);
}

TEST(Special, NormalQuantileInvertsCdf) {
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-15);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  // Round trips go through the lower tail, where the cdf keeps full relative precision.
  for (double z = -8.0; z <= 0.0; z += 0.25) {
    EXPECT_NEAR(normal_quantile(normal_cdf(z)), z, 1e-9);
    EXPECT_NEAR(normal_quantile(normal_sf(-z)), z, 1e-9);
  }
  EXPECT_NEAR(normal_sf(3.0) + normal_cdf(3.0), 1.0, 1e-15);
}

TEST(Linalg, InverseOfRandomSpdHasSmallResidual) {
  RngStream rng(7, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = 2 + trial % 7;
    Matrix b(p, p);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j) b(i, j) = draw_normal(rng);
    const Matrix a = b * b.transpose() + 0.5 * Matrix::Identity(p, p);
    const Matrix inv = inverse_spd(a);
    EXPECT_LT(inf_norm(a * inv - Matrix::Identity(p, p)), 1e-10);
    EXPECT_TRUE(is_symmetric(inv));
    const Vector rhs = Vector::LinSpaced(p, -1.0, 1.0);
    EXPECT_LT((a * solve_spd(a, rhs) - rhs).norm(), 1e-10);
  }
}

TEST(Linalg, IndefiniteMatrixThrows) {
  Matrix a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;
  try {
    inverse_spd(a);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPositiveDefinite);
  }
}

TEST(NumDiff, GradientAndHessianOfSmoothFunction) {
  auto f = [](const Vector& x) { return std::exp(x(0)) * std::sin(x(1)) + x(0) * x(2) * x(2); };
  Vector x(3);
  x << 0.3, -1.1, 2.0;
  const Vector g = num_gradient(f, x);
  EXPECT_NEAR(g(0), std::exp(x(0)) * std::sin(x(1)) + x(2) * x(2), 1e-9);
  EXPECT_NEAR(g(1), std::exp(x(0)) * std::cos(x(1)), 1e-9);
  EXPECT_NEAR(g(2), 2.0 * x(0) * x(2), 1e-9);
  const Matrix h = num_hessian(f, x);
  Matrix expected(3, 3);
  expected << std::exp(x(0)) * std::sin(x(1)), std::exp(x(0)) * std::cos(x(1)), 2.0 * x(2),
      std::exp(x(0)) * std::cos(x(1)), -std::exp(x(0)) * std::sin(x(1)), 0.0, 2.0 * x(2), 0.0, 2.0 * x(0);
  EXPECT_LT((h - expected).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_TRUE(h.isApprox(h.transpose(), 0.0));
}

TEST(NumDiff, MultiOutputMatchesSingleOutput) {
  auto f = [](const Vector& x) {
    Vector y(2);
    y << x.squaredNorm(), std::log1p(x(0) * x(0)) * x(1);
    return y;
  };
  Vector x(2);
  x << 0.7, -0.4;
  const auto multi = num_derivatives_multi(f, x);
  const Matrix h1 = num_hessian([&](const Vector& z) { return f(z)(1); }, x);
  EXPECT_TRUE(multi.hessians[1].isApprox(h1, 0.0));
}

TEST(NumDiff, NonFiniteProbeThrows) {
  auto f = [](const Vector& x) { return std::log(x(0)); };
  Vector x = Vector::Constant(1, 0.0);
  EXPECT_THROW(num_gradient(f, x), Error);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform(), y = b.uniform(), z = c.uniform();
    EXPECT_EQ(x, y);
    differ |= x != z;
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_TRUE(differ);
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(9, 5), derive_seed(9, 5));
}

TEST(Random, GammaAndBetaMomentsWithinFiveStandardErrors) {
  RngStream rng(11, 0);
  const int n = 20000;
  for (double shape : {0.4, 2.5, 40.0}) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += draw_gamma(rng, shape, 2.0);
    const double se = std::sqrt(shape / 4.0 / n);
    EXPECT_NEAR(s / n, shape / 2.0, 5.0 * se) << "shape=" << shape;
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += draw_beta(rng, 2.0, 5.0);
  const double var = 2.0 * 5.0 / (49.0 * 8.0);
  EXPECT_NEAR(s / n, 2.0 / 7.0, 5.0 * std::sqrt(var / n));
  long k = 0;
  for (int i = 0; i < 2000; ++i) k += draw_binomial(rng, 30, 0.2);
  EXPECT_NEAR(k / 2000.0, 6.0, 5.0 * std::sqrt(30 * 0.2 * 0.8 / 2000.0));
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
  auto run = [](unsigned threads) {
    std::vector<double> out(257);
    parallel_for(out.size(), threads, [&](std::size_t i) {
      RngStream rng(5, i);
      out[i] = draw_normal(rng);
    });
    return out;
  };
  EXPECT_EQ(run(1), run(4));
}

TEST(Parallel, LowestIndexExceptionIsRethrown) {
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 4 || i == 7) fail(ErrorKind::DomainError, std::to_string(i));
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find('4'), std::string::npos);
  }
}
