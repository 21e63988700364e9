#pragma once

// Tracking objective j_eps(w) = J(G K_eps w + offset, w), its discrete-adjoint gradient,
// and the stationarity measures evaluated at the switches of w.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "poroslip/control.hpp"
#include "poroslip/mollifier.hpp"
#include "poroslip/pde.hpp"

namespace poroslip {

using SpaceTimeFunction = std::function<double(double x, double t)>;

/// Desired states sampled at the space-time nodes, (N+1) x (M+1).
struct TrackingTargets {
  Eigen::MatrixXd u_d;
  Eigen::MatrixXd p_d;

  static TrackingTargets sample(const TimeGrid& grid, const PdeParams& params,
                                const SpaceTimeFunction& u_d, const SpaceTimeFunction& p_d) {
    const auto rows = static_cast<Eigen::Index>(grid.size() + 1);
    TrackingTargets out{Eigen::MatrixXd(rows, params.cells + 1), Eigen::MatrixXd(rows, params.cells + 1)};
    for (Eigen::Index n = 0; n < rows; ++n) {
      const double t = grid.node(static_cast<std::size_t>(n));
      for (int i = 0; i <= params.cells; ++i) {
        out.u_d(n, i) = u_d(params.node(i), t);
        out.p_d(n, i) = p_d(params.node(i), t);
      }
    }
    if (!out.u_d.allFinite() || !out.p_d.allFinite())
      throw std::invalid_argument("TrackingTargets: non-finite target sample");
    return out;
  }
};

inline double default_u_target(double x, double t) {
  return 0.5 + (1.0 - t) * (1.0 - t) * std::cos(50.0 * t) * (-1.975 * x + 4.0);
}

inline double default_p_target(double /*x*/, double t) {
  const double c = std::cos(50.0 * t);
  return 0.5 + c * c;
}

struct ObjectiveConfig {
  double alpha = 5e-5;   // TV weight
  double lambda = 0.0;   // Tikhonov weight
  MollifierConfig mollifier;
  PdeParams pde;
  InputKind input = InputKind::boundary_flux();
  SpaceTimeFunction u_d = default_u_target;
  SpaceTimeFunction p_d = default_p_target;
  std::optional<PdeState> offset_state;  // (u~, p~) from fixed data; zero if absent
  bool pde_enabled = true;               // false: G = 0, leaving only the control terms

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("ObjectiveConfig: alpha >= 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("ObjectiveConfig: lambda >= 0");
    if (!u_d || !p_d) throw std::invalid_argument("ObjectiveConfig: targets must be set");
  }
};

/// Cell averages of the gradient of j_eps (the Riesz representative in L2(0,T)).
struct GradientVector {
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values[i]; }
  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Reduced objective bound to one time grid. Copies share the factorised PDE solver.
class Objective {
 public:
  Objective(ObjectiveConfig cfg, const TimeGrid& grid) : cfg_(std::move(cfg)), grid_(grid) {
    cfg_.validate();
    if (cfg_.pde_enabled) solver_ = std::make_shared<const PdeSolver>(cfg_.pde, grid_);
    else cfg_.pde.validate();
    targets_ = std::make_shared<const TrackingTargets>(
        TrackingTargets::sample(grid_, cfg_.pde, cfg_.u_d, cfg_.p_d));
    if (cfg_.offset_state) {
      const auto& o = *cfg_.offset_state;
      if (!(o.grid == grid_) || o.u.rows() != targets_->u_d.rows() || o.u.cols() != targets_->u_d.cols())
        throw StructuralError("Objective: offset state does not match the grid");
    }
    mollifier_ = build_operator(grid_, cfg_.mollifier);
  }

  [[nodiscard]] const ObjectiveConfig& config() const { return cfg_; }
  [[nodiscard]] const TimeGrid& grid() const { return grid_; }
  [[nodiscard]] double alpha() const { return cfg_.alpha; }
  [[nodiscard]] double epsilon() const { return cfg_.mollifier.epsilon; }
  [[nodiscard]] const MollifierOp& mollifier() const { return mollifier_; }
  [[nodiscard]] const TrackingTargets& targets() const { return *targets_; }

  /// Same problem with a different smoothing width; the PDE factorisation is reused.
  [[nodiscard]] Objective with_epsilon(double epsilon) const {
    Objective out(*this);
    out.cfg_.mollifier.epsilon = epsilon;
    out.mollifier_ = build_operator(grid_, out.cfg_.mollifier);
    return out;
  }

  /// State (u, p) = G K_eps w + offset.
  [[nodiscard]] PdeState state(std::span<const double> w) const {
    check_length(w.size());
    PdeState st = PdeState::zeros(grid_, cfg_.pde);
    if (solver_) {
      const auto v = mollifier_.apply(w);
      st = solver_->solve_forward(cfg_.input, v);
    }
    if (cfg_.offset_state) {
      st.u += cfg_.offset_state->u;
      st.p += cfg_.offset_state->p;
    }
    return st;
  }

  [[nodiscard]] double value(std::span<const double> w) const {
    const PdeState st = state(w);
    const Eigen::VectorXd wt = time_trapezoid_weights(grid_);
    const Eigen::VectorXd wx = spatial_trapezoid_weights(cfg_.pde);
    const Eigen::MatrixXd eu = st.u - targets_->u_d;
    const Eigen::MatrixXd ep = st.p - targets_->p_d;
    const double tracking =
        0.5 * (wt.transpose() * (eu.cwiseAbs2() + ep.cwiseAbs2()) * wx)(0, 0);
    double sq = 0.0;
    for (double v : w) sq += v * v;
    return tracking + 0.5 * cfg_.lambda * grid_.dt() * sq;
  }

  [[nodiscard]] double value(const ControlGrid& w) const {
    check_grid(w);
    return value(w.as_real());
  }

  /// Exact gradient of `value`, divided by dt so it represents a function on (0, T).
  [[nodiscard]] GradientVector gradient(std::span<const double> w) const {
    check_length(w.size());
    const double dt = grid_.dt();
    std::vector<double> g(w.size(), 0.0);
    if (solver_) {
      const PdeState st = state(w);
      const Eigen::VectorXd wt = time_trapezoid_weights(grid_);
      const Eigen::VectorXd wx = spatial_trapezoid_weights(cfg_.pde);
      const Eigen::MatrixXd weights = wt * wx.transpose();
      Eigen::MatrixXd du = (st.u - targets_->u_d).cwiseProduct(weights);
      Eigen::MatrixXd dp = (st.p - targets_->p_d).cwiseProduct(weights);
      du.row(0).setZero();  // initial state is fixed
      dp.row(0).setZero();
      std::vector<double> h = solver_->input_sensitivity(cfg_.input, du, dp);
      for (double& v : h) v /= dt;
      g = mollifier_.apply_adjoint(h);
    }
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += cfg_.lambda * w[i];
    return {std::move(g)};
  }

  [[nodiscard]] GradientVector gradient(const ControlGrid& w) const {
    check_grid(w);
    return gradient(w.as_real());
  }

 private:
  void check_length(std::size_t n) const {
    if (n != grid_.size())
      throw StructuralError("Objective: control has " + std::to_string(n) + " cells, grid has " +
                            std::to_string(grid_.size()));
  }
  void check_grid(const ControlGrid& w) const {
    if (!(w.grid() == grid_)) throw StructuralError("Objective: control lives on a different grid");
  }

  ObjectiveConfig cfg_;
  TimeGrid grid_;
  std::shared_ptr<const PdeSolver> solver_;
  std::shared_ptr<const TrackingTargets> targets_;
  MollifierOp mollifier_;
};

/// Euclidean norm of the gradient sampled at the switches, each sample being the mean of
/// the two cells adjacent to the interface.
inline double instationarity(const ControlGrid& w, const GradientVector& g) {
  if (g.size() != w.size()) throw StructuralError("instationarity: gradient length mismatch");
  double sq = 0.0;
  for (const auto& s : switch_times(w)) {
    const double v = 0.5 * (g[s.interface - 1] + g[s.interface]);
    sq += v * v;
  }
  return std::sqrt(sq);
}

struct SwitchCheck {
  SwitchTime at;
  double left_mean;
  double right_mean;
  double margin;  // >= -tol when the sign conditions hold
  bool pass;
};

/// Sign conditions on one-sided gradient means at every switch of w. For an upward jump
/// the left mean must be >= 0 and the right mean <= 0; for a downward jump the reverse.
/// Means are taken over up to `window` cells on each side.
inline std::vector<SwitchCheck> check_l_stationarity(const ControlGrid& w, const GradientVector& g,
                                                     std::optional<double> tol = std::nullopt,
                                                     int window = 3) {
  if (window < 1) throw std::invalid_argument("check_l_stationarity: window must be >= 1");
  if (g.size() != w.size()) throw StructuralError("check_l_stationarity: gradient length mismatch");
  const double t = tol.value_or(1e-6 * g.max_abs());
  const auto n = static_cast<std::ptrdiff_t>(w.size());
  std::vector<SwitchCheck> out;
  for (const auto& s : switch_times(w)) {
    const auto i = static_cast<std::ptrdiff_t>(s.interface);
    double left = 0.0, right = 0.0;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, i + window);
    for (auto j = lo; j < i; ++j) left += g[static_cast<std::size_t>(j)];
    for (auto j = i; j < hi; ++j) right += g[static_cast<std::size_t>(j)];
    left /= static_cast<double>(i - lo);
    right /= static_cast<double>(hi - i);
    const bool upward = s.left_value < s.right_value;
    const double margin = upward ? std::min(left, -right) : std::min(-left, right);
    out.push_back({s, left, right, margin, margin >= -t});
  }
  return out;
}

}  // namespace poroslip
