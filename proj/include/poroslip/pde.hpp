#pragma once

// 1D poro(visco)elastic column on (0, L), quasi-static, incompressible constituents:
//
//   H_v u_xxt + H_e u_xx - p_x = 0
//   u_xt - k p_xx              = S
//   u(0,t) = p(0,t) = 0,  -k p_x(L,t) = psi(t),  H_v u_xt + H_e u_x - p = 0 at x = L
//   u(x,0) = 0
//
// Space: continuous P1 for both u and p on M uniform cells. Testing momentum with P1
// functions vanishing at x = 0 makes the cell averages of p equal H_e u_x + H_v u_xt
// exactly, which is the discrete counterpart of the pressure identity and keeps the
// pairing stable without extra stabilisation. Time: implicit Euler; the step matrix is
// constant so one sparse LU (and one for the transpose) serves the forward and adjoint
// sweeps.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "poroslip/control.hpp"

namespace poroslip {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PdeParams {
  double length = 2.0;  // L
  int cells = 64;       // M
  double lambda_e = 1.0;
  double mu_e = 1.0;
  double lambda_v = 0.0774;
  double mu_v = 0.25;
  double delta = 0.0;  // viscoelasticity switch
  double k = 1.0;      // permeability

  [[nodiscard]] double h_e() const { return lambda_e + 2.0 * mu_e; }
  [[nodiscard]] double h_v() const { return delta * (lambda_v + 2.0 * mu_v); }
  [[nodiscard]] double dx() const { return length / cells; }
  [[nodiscard]] double node(int i) const { return i == cells ? length : i * dx(); }

  void validate() const {
    if (!(length > 0.0)) throw std::invalid_argument("PdeParams: L must be > 0");
    if (cells < 2) throw std::invalid_argument("PdeParams: need M >= 2 spatial cells");
    if (!(h_e() > 0.0)) throw std::invalid_argument("PdeParams: H_e must be > 0");
    if (delta < 0.0 || h_v() < 0.0) throw std::invalid_argument("PdeParams: H_v must be >= 0");
    if (!(k > 0.0)) throw std::invalid_argument("PdeParams: k must be > 0");
  }
};

/// How the scalar control enters: Darcy flux at x = L, or a source chi(x) * w(t).
struct InputKind {
  enum class Kind { boundary_flux, distributed_source };
  Kind kind = Kind::boundary_flux;
  std::vector<double> chi;  // nodal values of the source profile, length M+1

  static InputKind boundary_flux() { return {}; }

  static InputKind distributed_source(std::vector<double> chi_nodal) {
    for (double c : chi_nodal)
      if (!std::isfinite(c)) throw std::invalid_argument("InputKind: chi must be finite");
    return {Kind::distributed_source, std::move(chi_nodal)};
  }

  static InputKind distributed_source(const PdeParams& params,
                                      const std::function<double(double)>& chi) {
    std::vector<double> nodal(params.cells + 1);
    for (int i = 0; i <= params.cells; ++i) nodal[i] = chi(params.node(i));
    return distributed_source(std::move(nodal));
  }

  [[nodiscard]] bool is_flux() const { return kind == Kind::boundary_flux; }
  [[nodiscard]] std::string name() const { return is_flux() ? "psi" : "S"; }
};

/// Space-time trajectory: row n is time t_n, column i is node x_i.
struct PdeState {
  TimeGrid grid;
  PdeParams params;
  Eigen::MatrixXd u;
  Eigen::MatrixXd p;

  static PdeState zeros(const TimeGrid& grid, const PdeParams& params) {
    const auto rows = static_cast<Eigen::Index>(grid.size() + 1);
    return {grid, params, Eigen::MatrixXd::Zero(rows, params.cells + 1),
            Eigen::MatrixXd::Zero(rows, params.cells + 1)};
  }

  /// CSV dump with columns t,x,u,p.
  void write_csv(std::ostream& os) const {
    std::ostringstream buf;
    buf.precision(12);
    buf << "t,x,u,p\n";
    for (Eigen::Index n = 0; n < u.rows(); ++n)
      for (Eigen::Index i = 0; i < u.cols(); ++i)
        buf << grid.node(n) << ',' << params.node(static_cast<int>(i)) << ',' << u(n, i) << ','
            << p(n, i) << '\n';
    os << buf.str();
  }
};

/// Trapezoid weights on the M+1 spatial nodes.
inline Eigen::VectorXd spatial_trapezoid_weights(const PdeParams& params) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(params.cells + 1, params.dx());
  w(0) *= 0.5;
  w(params.cells) *= 0.5;
  return w;
}

/// Trapezoid weights on the N+1 time nodes.
inline Eigen::VectorXd time_trapezoid_weights(const TimeGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n + 1, grid.dt());
  w(0) *= 0.5;
  w(n) *= 0.5;
  return w;
}

/// L2(0,T; L2(0,L)) norm of a nodal space-time field by the trapezoid rule in both variables.
inline double space_time_l2(const Eigen::MatrixXd& f, const TimeGrid& grid, const PdeParams& params) {
  const Eigen::VectorXd wt = time_trapezoid_weights(grid);
  const Eigen::VectorXd wx = spatial_trapezoid_weights(params);
  return std::sqrt((wt.transpose() * f.cwiseAbs2() * wx)(0, 0));
}

/// Assembled and factorised implicit-Euler step for one (params, time grid) pair.
/// Immutable after construction; solves are const.
class PdeSolver {
 public:
  PdeSolver(const PdeParams& params, const TimeGrid& grid) : params_(params), grid_(grid) {
    params_.validate();
    assemble();
  }

  [[nodiscard]] const PdeParams& params() const { return params_; }
  [[nodiscard]] const TimeGrid& grid() const { return grid_; }
  [[nodiscard]] Eigen::Index dofs() const { return 2 * (params_.cells + 1); }

  static Eigen::Index u_index(int i) { return 2 * i; }
  static Eigen::Index p_index(int i) { return 2 * i + 1; }

  /// Coefficient vector of the control value in the right-hand side of one step.
  [[nodiscard]] Eigen::VectorXd input_vector(const InputKind& input) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dofs());
    const double dt = grid_.dt();
    const int m = params_.cells;
    if (input.is_flux()) {
      b(p_index(m)) = -dt;
    } else {
      if (static_cast<int>(input.chi.size()) != m + 1)
        throw StructuralError("InputKind: chi must have M+1 nodal values");
      const double h = params_.dx();
      for (int e = 0; e < m; ++e) {
        const double c0 = input.chi[e], c1 = input.chi[e + 1];
        b(p_index(e)) += dt * h / 6.0 * (2.0 * c0 + c1);
        b(p_index(e + 1)) += dt * h / 6.0 * (c0 + 2.0 * c1);
      }
      b(p_index(0)) = 0.0;
    }
    return b;
  }

  /// Implicit Euler with the input held at control[n-1] over the step (t_{n-1}, t_n].
  [[nodiscard]] PdeState solve_forward(const InputKind& input, std::span<const double> control) const {
    if (control.size() != grid_.size())
      throw StructuralError("solve_forward: control has " + std::to_string(control.size()) +
                            " cells, grid has " + std::to_string(grid_.size()));
    const Eigen::VectorXd b = input_vector(input);
    PdeState state = PdeState::zeros(grid_, params_);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dofs());
    Eigen::VectorXd rhs(dofs());
    for (std::size_t n = 1; n <= grid_.size(); ++n) {
      rhs.noalias() = rhs_matrix_ * x;
      rhs += control[n - 1] * b;
      x = lu_.solve(rhs);
      x(u_index(0)) = 0.0;  // identity rows; drop pivoting roundoff
      x(p_index(0)) = 0.0;
      if (!x.allFinite())
        throw NumericalError("solve_forward: non-finite state at step " + std::to_string(n));
      scatter(x, state, static_cast<Eigen::Index>(n));
    }
    return state;
  }

  /// Reverse sweep: given dJ/dx^n for n = 1..N (as (u, p) nodal fields in `state_grad`,
  /// row 0 ignored), returns dJ/dv_n for each control cell.
  [[nodiscard]] std::vector<double> input_sensitivity(const InputKind& input,
                                                      const Eigen::MatrixXd& du,
                                                      const Eigen::MatrixXd& dp) const {
    const auto steps = static_cast<Eigen::Index>(grid_.size());
    if (du.rows() != steps + 1 || dp.rows() != steps + 1)
      throw StructuralError("input_sensitivity: gradient fields have the wrong shape");
    const Eigen::VectorXd b = input_vector(input);
    std::vector<double> sens(grid_.size(), 0.0);
    Eigen::VectorXd carry = Eigen::VectorXd::Zero(dofs());  // R^T mu^{n+1}
    Eigen::VectorXd rhs(dofs());
    for (Eigen::Index n = steps; n >= 1; --n) {
      for (int i = 0; i <= params_.cells; ++i) {
        rhs(u_index(i)) = du(n, i);
        rhs(p_index(i)) = dp(n, i);
      }
      rhs += carry;
      Eigen::VectorXd mu = lu_t_.solve(rhs);
      if (!mu.allFinite())
        throw NumericalError("input_sensitivity: non-finite adjoint at step " + std::to_string(n));
      sens[n - 1] = b.dot(mu);
      carry.noalias() = rhs_matrix_t_ * mu;
    }
    return sens;
  }

 private:
  void scatter(const Eigen::VectorXd& x, PdeState& state, Eigen::Index n) const {
    for (int i = 0; i <= params_.cells; ++i) {
      state.u(n, i) = x(u_index(i));
      state.p(n, i) = x(p_index(i));
    }
  }

  void assemble() {
    using Triplet = Eigen::Triplet<double>;
    const int m = params_.cells;
    const double h = params_.dx();
    const double dt = grid_.dt();
    const double he = params_.h_e(), hv = params_.h_v(), k = params_.k;

    std::vector<Triplet> lhs, rhs;
    for (int e = 0; e < m; ++e) {
      const int nodes[2] = {e, e + 1};
      for (int a = 0; a < 2; ++a) {
        const int i = nodes[a];
        for (int c = 0; c < 2; ++c) {
          const int j = nodes[c];
          const double stiff = (a == c ? 1.0 : -1.0) / h;
          const double dphi_i = (a == 0 ? -1.0 : 1.0) / h;  // derivative of test function
          const double dphi_j = (c == 0 ? -1.0 : 1.0) / h;  // derivative of trial function
          const double coupling_mom = dphi_i * h / 2.0;     // int phi_j * phi_i'
          const double coupling_mass = dphi_j * h / 2.0;    // int phi_j' * phi_i
          if (i != 0) {
            // momentum, tested with v_i, scaled by dt
            lhs.emplace_back(u_index(i), u_index(j), (dt * he + hv) * stiff);
            lhs.emplace_back(u_index(i), p_index(j), -dt * coupling_mom);
            if (hv != 0.0) rhs.emplace_back(u_index(i), u_index(j), hv * stiff);
            // mass balance, tested with q_i, scaled by dt
            lhs.emplace_back(p_index(i), u_index(j), coupling_mass);
            lhs.emplace_back(p_index(i), p_index(j), dt * k * stiff);
            rhs.emplace_back(p_index(i), u_index(j), coupling_mass);
          }
        }
      }
    }
    lhs.emplace_back(u_index(0), u_index(0), 1.0);
    lhs.emplace_back(p_index(0), p_index(0), 1.0);

    Eigen::SparseMatrix<double> s(dofs(), dofs());
    s.setFromTriplets(lhs.begin(), lhs.end());
    rhs_matrix_.resize(dofs(), dofs());
    rhs_matrix_.setFromTriplets(rhs.begin(), rhs.end());
    rhs_matrix_t_ = rhs_matrix_.transpose();

    lu_.compute(s);
    if (lu_.info() != Eigen::Success)
      throw NumericalError("PdeSolver: step matrix factorisation failed");
    Eigen::SparseMatrix<double> st = s.transpose();
    lu_t_.compute(st);
    if (lu_t_.info() != Eigen::Success)
      throw NumericalError("PdeSolver: transposed step matrix factorisation failed");
  }

  PdeParams params_;
  TimeGrid grid_;
  Eigen::SparseMatrix<double> rhs_matrix_;
  Eigen::SparseMatrix<double> rhs_matrix_t_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_t_;
};

/// One-shot convenience wrapper: assemble, factorise, and run.
inline PdeState solve_forward(const PdeParams& params, const TimeGrid& grid, const InputKind& input,
                              std::span<const double> control) {
  return PdeSolver(params, grid).solve_forward(input, control);
}

inline PdeState solve_forward(const PdeParams& params, const InputKind& input, const ControlGrid& w) {
  const auto real = w.as_real();
  return solve_forward(params, w.grid(), input, real);
}

}  // namespace poroslip
