#pragma once

// Discrete smoothing operator K_eps = r_[0,T](eta_eps * w) acting on cell averages, with
// zero extension of w outside [0, T], and its adjoint in the dt-weighted inner product.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "poroslip/control.hpp"
#include "poroslip/quadrature.hpp"

namespace poroslip {

struct MollifierConfig {
  double epsilon = 0.0;              // support half-width; 0 means no smoothing
  unsigned quadrature_subsamples = 16;  // panels per smooth piece of the kernel integral
};

namespace detail {
inline double bump_unnormalized(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 / (s * s - 1.0));
}
}  // namespace detail

/// C such that C * exp(1/(s^2-1)) integrates to one over (-1, 1).
inline double mollifier_normalization() {
  static const double c =
      1.0 / quad::adaptive([](double s) { return detail::bump_unnormalized(s); }, -1.0, 1.0, 1e-15);
  return c;
}

/// eta_eps(t) = eta(t/eps)/eps with the standard bump eta.
inline double standard_mollifier(double t, double epsilon) {
  if (!(epsilon > 0.0)) throw std::domain_error("standard_mollifier: epsilon must be > 0");
  return mollifier_normalization() * detail::bump_unnormalized(t / epsilon) / epsilon;
}

class MollifierOp {
 public:
  MollifierOp() = default;
  MollifierOp(TimeGrid grid, Eigen::MatrixXd k, int bandwidth)
      : grid_(grid), k_(std::move(k)), k_adj_(k_.transpose()), bandwidth_(bandwidth) {}

  [[nodiscard]] const TimeGrid& grid() const { return grid_; }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return k_; }
  [[nodiscard]] const Eigen::MatrixXd& adjoint_matrix() const { return k_adj_; }
  /// Largest |i - j| with a nonzero entry.
  [[nodiscard]] int bandwidth() const { return bandwidth_; }
  [[nodiscard]] bool is_identity() const { return bandwidth_ == 0 && (k_.diagonal().array() == 1.0).all(); }

  [[nodiscard]] std::vector<double> apply(std::span<const double> w) const { return mul(k_, w); }
  [[nodiscard]] std::vector<double> apply_adjoint(std::span<const double> g) const {
    return mul(k_adj_, g);
  }

 private:
  [[nodiscard]] std::vector<double> mul(const Eigen::MatrixXd& m, std::span<const double> x) const {
    const auto n = static_cast<int>(grid_.size());
    if (static_cast<int>(x.size()) != n)
      throw StructuralError("MollifierOp: vector length " + std::to_string(x.size()) +
                            " does not match grid size " + std::to_string(n));
    std::vector<double> y(x.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      const int lo = std::max(0, i - bandwidth_);
      const int hi = std::min(n - 1, i + bandwidth_);
      double s = 0.0;
      for (int j = lo; j <= hi; ++j) s += m(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  TimeGrid grid_;
  Eigen::MatrixXd k_;
  Eigen::MatrixXd k_adj_;
  int bandwidth_ = 0;
};

/// Cell-to-cell weight for cells m apart: (1/dt) * int eta_eps(tau) * max(0, dt - |tau - m dt|).
/// The double integral over two cells reduces to this because the kernel depends on t - s only.
inline double mollifier_cell_weight(int m, double dt, const MollifierConfig& cfg) {
  const double eps = cfg.epsilon;
  const double md = m * dt;
  auto integrand = [&](double tau) {
    return standard_mollifier(tau, eps) * std::max(0.0, dt - std::abs(tau - md));
  };
  // Kinks of the overlap hat at md; kernel support (-eps, eps).
  double total = 0.0;
  const double pieces[2][2] = {{md - dt, md}, {md, md + dt}};
  for (const auto& p : pieces) {
    const double a = std::max(p[0], -eps);
    const double b = std::min(p[1], eps);
    if (a < b) total += quad::composite_gauss(integrand, a, b, cfg.quadrature_subsamples);
  }
  return total / dt;
}

inline MollifierOp build_operator(const TimeGrid& grid, const MollifierConfig& cfg) {
  if (cfg.epsilon < 0.0 || !std::isfinite(cfg.epsilon))
    throw std::invalid_argument("build_operator: epsilon must be finite and >= 0");
  if (cfg.quadrature_subsamples == 0)
    throw std::invalid_argument("build_operator: quadrature_subsamples must be positive");
  const auto n = static_cast<int>(grid.size());
  if (cfg.epsilon == 0.0) return {grid, Eigen::MatrixXd::Identity(n, n), 0};

  const double dt = grid.dt();
  const int band = std::min(n - 1, static_cast<int>(std::ceil(cfg.epsilon / dt)));
  std::vector<double> weights(band + 1);
  for (int m = 0; m <= band; ++m) weights[m] = mollifier_cell_weight(m, dt, cfg);

  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - band); j <= std::min(n - 1, i + band); ++j)
      k(i, j) = weights[std::abs(i - j)];
  }
  return {grid, std::move(k), band};
}

}  // namespace poroslip
