#pragma once

// Eigenfunction-series solutions of the 1D column, used as validation oracles for the
// numerical solver. Basis e_n(x) = sqrt(2/L) sin(lambda_n x), lambda_n = (2n-1) pi / (2L),
// which satisfies e_n(0) = 0 and e_n'(L) = 0.
//
// Every time integral is a convolution of the input with exp(-c (t - s)) (or a difference
// of two such kernels), so each is advanced node-to-node by the exact propagation factor
// plus an adaptive Gauss-Kronrod integral over one step. Neither psi' nor nested
// quadrature is needed.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "poroslip/pde.hpp"
#include "poroslip/quadrature.hpp"

namespace poroslip {

using TimeFunction = std::function<double(double)>;

inline double eigen_lambda(int n, double length) {
  return (2.0 * n - 1.0) * std::numbers::pi / (2.0 * length);
}

/// gamma_n = 1 / (1 + lambda_n^2 k H_v).
inline double viscous_gamma(int n, const PdeParams& params) {
  const double lam = eigen_lambda(n, params.length);
  return 1.0 / (1.0 + lam * lam * params.k * params.h_v());
}

/// (x, e_n) on (0, L), from int_0^L x sin(lambda x) dx = sin(lambda L) / lambda^2.
inline double moment_of_x(int n, double length) {
  const double lam = eigen_lambda(n, length);
  const double sign = (n % 2 == 1) ? 1.0 : -1.0;
  return std::sqrt(2.0 / length) * sign / (lam * lam);
}

/// d_n = (chi, e_n), by adaptive quadrature split into half-periods of e_n.
inline double source_coefficient(int n, double length, const std::function<double(double)>& chi) {
  const double lam = eigen_lambda(n, length);
  const double norm = std::sqrt(2.0 / length);
  auto f = [&](double x) { return chi(x) * norm * std::sin(lam * x); };
  const int pieces = 2 * n;
  double sum = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double a = length * i / pieces, b = length * (i + 1) / pieces;
    sum += quad::adaptive(f, a, b, 1e-13);
  }
  return sum;
}

namespace detail {

/// E_c(t_m) = int_0^{t_m} exp(-c (t_m - s)) f(s) ds for every node of the grid.
inline std::vector<double> exp_convolution(const TimeFunction& f, double c, const TimeGrid& grid,
                                           double tol) {
  std::vector<double> out(grid.size() + 1, 0.0);
  const double decay = std::exp(-c * grid.dt());
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double a = grid.node(m), b = grid.node(m + 1);
    const double local = quad::exp_weighted([&](double tau) { return f(b - tau); }, c, b - a, tol);
    out[m + 1] = decay * out[m] + local;
  }
  return out;
}

/// Q(t_m) = int_0^{t_m} f(s) [exp(-r tau) - exp(-a tau)] / (a - r) ds, tau = t_m - s,
/// evaluated without cancelling the two exponentials when r is close to a.
inline std::vector<double> exp_difference_convolution(const TimeFunction& f, double r, double a,
                                                      const std::vector<double>& e_a,
                                                      const TimeGrid& grid, double tol) {
  auto kernel = [&](double tau) {
    const double d = a - r;
    return std::exp(-a * tau) * (d == 0.0 ? tau : std::expm1(d * tau) / d);
  };
  std::vector<double> out(grid.size() + 1, 0.0);
  const double dt = grid.dt();
  const double decay = std::exp(-r * dt);
  const double cross = kernel(dt);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double lo = grid.node(m), hi = grid.node(m + 1);
    const double local = quad::adaptive([&](double s) { return kernel(hi - s) * f(s); }, lo, hi, tol);
    out[m + 1] = decay * out[m] + cross * e_a[m] + local;
  }
  return out;
}

inline void check_modes(int modes) {
  if (modes < 1) throw std::invalid_argument("analytic oracle: need at least one mode");
}

}  // namespace detail

struct OracleOptions {
  int modes = 200;
  double time_tol = 1e-12;  // absolute tolerance of each single-step quadrature
};

/// Poroelastic column (H_v = 0) driven by the boundary flux psi, psi(0) = 0.
inline PdeState analytic_oracle_pe(const PdeParams& params, const TimeFunction& psi,
                                   const TimeGrid& eval, const OracleOptions& opt = {}) {
  detail::check_modes(opt.modes);
  if (params.h_v() != 0.0) throw std::invalid_argument("analytic_oracle_pe: requires H_v = 0");
  const double he = params.h_e(), k = params.k, len = params.length;
  const int mx = params.cells;
  const double norm = std::sqrt(2.0 / len);

  PdeState st = PdeState::zeros(eval, params);
  std::vector<double> psi_t(eval.size() + 1);
  for (std::size_t m = 0; m <= eval.size(); ++m) psi_t[m] = psi(eval.node(m));

  for (int n = 1; n <= opt.modes; ++n) {
    const double lam = eigen_lambda(n, len);
    const double r = k * he * lam * lam;
    const double cn = moment_of_x(n, len) / k;
    const auto e_r = detail::exp_convolution(psi, r, eval, opt.time_tol);
    for (std::size_t m = 0; m <= eval.size(); ++m) {
      // int_0^t exp(-r(t-s)) psi'(s) ds, integrated by parts with psi(0) = 0
      const double fn = cn * (psi_t[m] - r * e_r[m]);
      for (int i = 0; i <= mx; ++i) {
        const double x = params.node(i);
        st.p(m, i) += fn * norm * std::sin(lam * x);
        st.u(m, i) += fn / (he * lam) * norm * (1.0 - std::cos(lam * x));
      }
    }
  }
  for (std::size_t m = 0; m <= eval.size(); ++m) {
    for (int i = 0; i <= mx; ++i) {
      const double x = params.node(i);
      st.p(m, i) -= x / k * psi_t[m];
      st.u(m, i) -= x * x / (2.0 * k * he) * psi_t[m];
    }
  }
  return st;
}

/// Psi and Psi' at the grid nodes, where H_v Psi' + H_e Psi = psi / k and Psi(0) = 0.
struct ViscousLift {
  std::vector<double> value;
  std::vector<double> rate;
};

inline ViscousLift viscous_lift(const PdeParams& params, const TimeFunction& psi, const TimeGrid& eval,
                                double tol = 1e-12) {
  const double hv = params.h_v();
  if (!(hv > 0.0)) throw std::invalid_argument("viscous_lift: requires H_v > 0");
  const double a = params.h_e() / hv, k = params.k;
  const auto e_a = detail::exp_convolution(psi, a, eval, tol);
  ViscousLift out{std::vector<double>(e_a.size()), std::vector<double>(e_a.size())};
  for (std::size_t m = 0; m < e_a.size(); ++m) {
    out.value[m] = e_a[m] / (k * hv);
    out.rate[m] = (psi(eval.node(m)) - a * e_a[m]) / (k * hv);
  }
  return out;
}

/// Poroviscoelastic column (H_v > 0) driven by the boundary flux psi.
///
/// Lift u = y - (x^2/2) Psi(t) with H_v Psi' + H_e Psi = psi / k, Psi(0) = 0; the lifted
/// problem has homogeneous boundary data and source x Psi'(t).
inline PdeState analytic_oracle_pve(const PdeParams& params, const TimeFunction& psi,
                                    const TimeGrid& eval, const OracleOptions& opt = {}) {
  detail::check_modes(opt.modes);
  const double hv = params.h_v();
  if (!(hv > 0.0)) throw std::invalid_argument("analytic_oracle_pve: requires H_v > 0");
  const double he = params.h_e(), k = params.k, len = params.length;
  const double a = he / hv;
  const int mx = params.cells;
  const double norm = std::sqrt(2.0 / len);
  const std::size_t nt = eval.size();

  const auto e_a = detail::exp_convolution(psi, a, eval, opt.time_tol);
  const ViscousLift lift = viscous_lift(params, psi, eval, opt.time_tol);
  const auto& big_psi = lift.value;
  const auto& big_psi_dot = lift.rate;
  std::vector<double> psi_t(nt + 1);
  for (std::size_t m = 0; m <= nt; ++m) psi_t[m] = psi(eval.node(m));

  PdeState st = PdeState::zeros(eval, params);
  for (int n = 1; n <= opt.modes; ++n) {
    const double lam = eigen_lambda(n, len);
    const double gam = viscous_gamma(n, params);
    const double r = k * he * lam * lam * gam;
    const double bn = moment_of_x(n, len);
    const auto q = detail::exp_difference_convolution(psi, r, a, e_a, eval, opt.time_tol);
    for (std::size_t m = 0; m <= nt; ++m) {
      // I_n = int_0^t exp(-r(t-xi)) Psi'(xi) dxi
      const double in = (e_a[m] - r * q[m]) / (k * hv);
      const double fn = gam * bn / lam * in;
      const double pn = bn * (he * gam * gam * in + hv * gam * big_psi_dot[m]);
      for (int i = 0; i <= mx; ++i) {
        const double x = params.node(i);
        st.u(m, i) += fn * norm * (1.0 - std::cos(lam * x));
        st.p(m, i) += pn * norm * std::sin(lam * x);
      }
    }
  }
  for (std::size_t m = 0; m <= nt; ++m) {
    for (int i = 0; i <= mx; ++i) {
      const double x = params.node(i);
      st.u(m, i) -= x * x / 2.0 * big_psi[m];
      st.p(m, i) -= x / k * psi_t[m];
    }
  }
  return st;
}

/// Poroelastic column (H_v = 0) driven by the distributed source chi(x) s(t).
inline PdeState analytic_oracle_pe_source(const PdeParams& params,
                                          const std::function<double(double)>& chi,
                                          const TimeFunction& s, const TimeGrid& eval,
                                          const OracleOptions& opt = {}) {
  detail::check_modes(opt.modes);
  if (params.h_v() != 0.0)
    throw std::invalid_argument("analytic_oracle_pe_source: requires H_v = 0");
  const double he = params.h_e(), k = params.k, len = params.length;
  const int mx = params.cells;
  const double norm = std::sqrt(2.0 / len);

  PdeState st = PdeState::zeros(eval, params);
  for (int n = 1; n <= opt.modes; ++n) {
    const double lam = eigen_lambda(n, len);
    const double r = k * he * lam * lam;
    const double dn = source_coefficient(n, len, chi);
    if (dn == 0.0) continue;
    const auto e_r = detail::exp_convolution(s, r, eval, opt.time_tol);
    for (std::size_t m = 0; m <= eval.size(); ++m) {
      const double gn = he * dn * e_r[m];
      for (int i = 0; i <= mx; ++i) {
        const double x = params.node(i);
        st.p(m, i) += gn * norm * std::sin(lam * x);
        st.u(m, i) += gn / (he * lam) * norm * (1.0 - std::cos(lam * x));
      }
    }
  }
  return st;
}

}  // namespace poroslip
