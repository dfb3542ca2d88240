#pragma once

// Central differences with Richardson extrapolation. The error of each
// central-difference estimate expands in even powers of the step, so level m
// of the tableau combines neighbours with weight r^(2m).

#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/numkit/linalg.hpp"

namespace adjwald::numkit {

struct DiffSpec {
  double initial_step = 1e-4;  // step for coordinate u is max(initial_step, initial_step * |x_u|)
  double hessian_step = 1e-3;  // same rule for second differences, whose rounding error grows like 1/h^2
  int richardson_levels = 4;
  double step_reduction = 2.0;

  void validate() const {
    if (!(initial_step > 0.0)) fail(ErrorKind::DomainError, "DiffSpec.initial_step must be > 0");
    if (!(hessian_step > 0.0)) fail(ErrorKind::DomainError, "DiffSpec.hessian_step must be > 0");
    if (richardson_levels < 2) fail(ErrorKind::DomainError, "DiffSpec.richardson_levels must be >= 2");
    if (!(step_reduction > 1.0)) fail(ErrorKind::DomainError, "DiffSpec.step_reduction must be > 1");
  }

  double step_for(double xu) const { return std::max(initial_step, initial_step * std::fabs(xu)); }
  double hessian_step_for(double xu) const { return std::max(hessian_step, hessian_step * std::fabs(xu)); }
};

namespace detail {

inline bool all_finite(double v) { return std::isfinite(v); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

template <class F>
auto probe(const F& f, const Vector& x) {
  auto value = f(x);
  if (!all_finite(value)) fail(ErrorKind::NonFiniteEvaluation, "function returned a non-finite value during differencing");
  return value;
}

// Collapse a tableau of estimates at steps h, h/r, h/r^2, ... into one value.
template <class Y>
Y richardson(std::vector<Y> est, double r) {
  double factor = r * r;
  for (std::size_t level = 1; level < est.size(); ++level) {
    for (std::size_t k = 0; k + level < est.size(); ++k) {
      est[k] = (factor * est[k + 1] - est[k]) / (factor - 1.0);
    }
    factor *= r * r;
  }
  return est.front();
}

template <class F>
auto gradient_entries(const F& f, const Vector& x, const DiffSpec& spec) {
  using Y = std::decay_t<decltype(f(x))>;
  std::vector<Y> grad;
  grad.reserve(x.size());
  for (Index u = 0; u < x.size(); ++u) {
    std::vector<Y> est;
    double h = spec.step_for(x(u));
    for (int k = 0; k < spec.richardson_levels; ++k, h /= spec.step_reduction) {
      Vector xp = x, xm = x;
      xp(u) += h;
      xm(u) -= h;
      est.push_back(Y((probe(f, xp) - probe(f, xm)) / (2.0 * h)));
    }
    grad.push_back(richardson(std::move(est), spec.step_reduction));
  }
  return grad;
}

template <class F>
auto hessian_entries(const F& f, const Vector& x, const DiffSpec& spec) {
  using Y = std::decay_t<decltype(f(x))>;
  const Index p = x.size();
  const Y f0 = probe(f, x);
  std::vector<std::vector<Y>> hess(p, std::vector<Y>(p, Y(f0 * 0.0)));
  for (Index u = 0; u < p; ++u) {
    std::vector<Y> est;
    double h = spec.hessian_step_for(x(u));
    for (int k = 0; k < spec.richardson_levels; ++k, h /= spec.step_reduction) {
      Vector xp = x, xm = x;
      xp(u) += h;
      xm(u) -= h;
      est.push_back(Y((probe(f, xp) - 2.0 * f0 + probe(f, xm)) / (h * h)));
    }
    hess[u][u] = richardson(std::move(est), spec.step_reduction);
  }
  for (Index u = 0; u < p; ++u) {
    for (Index v = u + 1; v < p; ++v) {
      std::vector<Y> est;
      double hu = spec.hessian_step_for(x(u));
      double hv = spec.hessian_step_for(x(v));
      for (int k = 0; k < spec.richardson_levels; ++k, hu /= spec.step_reduction, hv /= spec.step_reduction) {
        Vector xpp = x, xpm = x, xmp = x, xmm = x;
        xpp(u) += hu; xpp(v) += hv;
        xpm(u) += hu; xpm(v) -= hv;
        xmp(u) -= hu; xmp(v) += hv;
        xmm(u) -= hu; xmm(v) -= hv;
        est.push_back(Y((probe(f, xpp) - probe(f, xpm) - probe(f, xmp) + probe(f, xmm)) / (4.0 * hu * hv)));
      }
      hess[u][v] = richardson(std::move(est), spec.step_reduction);
      hess[v][u] = hess[u][v];
    }
  }
  return hess;
}

}  // namespace detail

template <class F>
Vector num_gradient(const F& f, const Vector& x, const DiffSpec& spec = {}) {
  spec.validate();
  const auto entries = detail::gradient_entries(f, x, spec);
  Vector g(x.size());
  for (Index u = 0; u < x.size(); ++u) g(u) = entries[u];
  return g;
}

/// Symmetric by construction: off-diagonal entries are computed once.
template <class F>
Matrix num_hessian(const F& f, const Vector& x, const DiffSpec& spec = {}) {
  spec.validate();
  const auto entries = detail::hessian_entries(f, x, spec);
  Matrix h(x.size(), x.size());
  for (Index u = 0; u < x.size(); ++u)
    for (Index v = 0; v < x.size(); ++v) h(u, v) = entries[u][v];
  return h;
}

/// Gradients and hessians of every component of a vector-valued function,
/// sharing the probes. Component c of the result is bit-identical to
/// differentiating component c alone.
struct MultiDerivatives {
  Matrix jacobian;               // outputs x inputs
  std::vector<Matrix> hessians;  // one per output
};

template <class F>
MultiDerivatives num_derivatives_multi(const F& f, const Vector& x, const DiffSpec& spec = {}) {
  spec.validate();
  const auto grad = detail::gradient_entries(f, x, spec);
  const auto hess = detail::hessian_entries(f, x, spec);
  const Index p = x.size();
  const Index m = p > 0 ? grad.front().size() : 0;
  MultiDerivatives out{Matrix(m, p), std::vector<Matrix>(m, Matrix(p, p))};
  for (Index u = 0; u < p; ++u) {
    out.jacobian.col(u) = grad[u];
    for (Index v = 0; v < p; ++v)
      for (Index c = 0; c < m; ++c) out.hessians[c](u, v) = hess[u][v](c);
  }
  return out;
}

}  // namespace adjwald::numkit
