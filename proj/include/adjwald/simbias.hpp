#pragma once

// Simulation-based estimate of the first-order bias, usable wherever the
// closed form is unavailable: the average of theta_hat* - theta over
// parametric replicates drawn at theta.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/parallel.hpp"
#include "adjwald/wald.hpp"

namespace adjwald {

struct SimulatedBias {
  Vector bias;
  Vector std_error;  // Monte Carlo standard error of each component
  int used = 0;
  int failures = 0;
};

template <ResamplableModel M>
SimulatedBias simulate_bias(const M& model, const Vector& theta, int replicates, std::uint64_t seed, int threads = 1) {
  if (replicates < 2) fail(ErrorKind::DomainError, "simulated bias needs at least 2 replicates");
  const auto count = static_cast<std::size_t>(replicates);
  std::vector<Vector> est(count);
  std::vector<char> ok(count, 0);
  parallel_for(count, resolve_threads(threads), [&](std::size_t r) {
    numkit::RngStream rng(seed, r);
    try {
      const FitResult f = model.simulate(theta, rng).fit(EstimatorKind::ML);
      if (f.converged && !f.any_diverged() && f.theta.allFinite()) {
        est[r] = f.theta - theta;
        ok[r] = 1;
      }
    } catch (const Error&) {
    }
  });
  SimulatedBias out;
  const Index p = theta.size();
  Vector sum = Vector::Zero(p), sq = Vector::Zero(p);
  for (std::size_t r = 0; r < count; ++r) {
    if (!ok[r]) {
      ++out.failures;
      continue;
    }
    ++out.used;
    sum += est[r];
    sq += est[r].cwiseProduct(est[r]);
  }
  if (out.used < 2) fail(ErrorKind::RefitFailures, "too few successful replicates for a simulated bias");
  const double n = out.used;
  out.bias = sum / n;
  out.std_error = ((sq / n - out.bias.cwiseProduct(out.bias)) * (n / (n - 1.0)) / n).cwiseMax(0.0).cwiseSqrt();
  return out;
}

/// View of a model whose bias() is replaced by the simulation estimate.
/// The seed is fixed, so bias(theta) is a deterministic function of theta.
template <ResamplableModel M>
class WithSimulatedBias {
 public:
  WithSimulatedBias(const M& base, int replicates, std::uint64_t seed, int threads = 1)
      : base_(&base), replicates_(replicates), seed_(seed), threads_(threads) {}

  Index dim() const { return base_->dim(); }
  Matrix info(const Vector& theta) const { return base_->info(theta); }
  Vector bias(const Vector& theta) const { return simulate_bias(*base_, theta, replicates_, seed_, threads_).bias; }

  InfoDerivatives info_derivatives(const Vector& theta) const
    requires AnalyticInfoModel<M>
  {
    return base_->info_derivatives(theta);
  }

 private:
  const M* base_;
  int replicates_;
  std::uint64_t seed_;
  int threads_;
};

}  // namespace adjwald
