#pragma once

// Thin wrappers over Boost.Math quadrature used by the mollifier and the series oracles.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace poroslip::quad {

/// Adaptive 15/31-point Gauss–Kronrod on [a, b] to the given absolute tolerance.
/// The relative tolerance handed to Boost is floored at 1e-13 so roundoff in the error
/// estimate cannot force a full-depth recursion.
template <class F>
double adaptive(F&& f, double a, double b, double abs_tol = 1e-12, unsigned max_depth = 15) {
  if (a == b) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  double coarse = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 0, 0.0, &err, &l1);
  if (err <= abs_tol) return coarse;
  double rel = l1 > 0.0 ? std::max(abs_tol / l1, 1e-13) : 1e-13;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel,
                                                                       &err);
}

/// Composite 10-point Gauss–Legendre with `panels` equal panels on [a, b].
template <class F>
double composite_gauss(F&& f, double a, double b, unsigned panels) {
  if (a == b || panels == 0) return 0.0;
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (unsigned i = 0; i < panels; ++i) {
    double lo = a + i * h;
    sum += boost::math::quadrature::gauss<double, 10>::integrate(f, lo, lo + h);
  }
  return sum;
}

/// int_0^h exp(-c tau) f(tau) dtau for c >= 0. Panels are no wider than 4/c, and the
/// integral is truncated where the weight has fallen below exp(-40), so steep kernels are
/// resolved instead of slipping between the Gauss nodes.
template <class F>
double exp_weighted(F&& f, double c, double h, double abs_tol = 1e-12) {
  if (h <= 0.0) return 0.0;
  auto g = [&](double tau) { return std::exp(-c * tau) * f(tau); };
  if (c * h <= 4.0) return adaptive(g, 0.0, h, abs_tol);
  const double end = std::min(h, 40.0 / c);
  const auto panels = static_cast<unsigned>(std::ceil(end * c / 4.0));
  const double w = end / panels;
  double sum = 0.0;
  for (unsigned i = 0; i < panels; ++i) sum += adaptive(g, i * w, i + 1 == panels ? end : (i + 1) * w, abs_tol);
  return sum;
}

}  // namespace poroslip::quad
