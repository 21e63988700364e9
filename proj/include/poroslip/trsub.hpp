#pragma once

// Exact solver for the discretised trust-region subproblem
//
//   min_d  dt * sum_i g_i d_i + alpha * (TV(w + d) - TV(w))
//   s.t.   w + d in W^N,  dt * sum_i |d_i| <= Delta
//
// by dynamic programming over (cell, new level, budget units consumed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "poroslip/control.hpp"
#include "poroslip/objective.hpp"

namespace poroslip {

struct TrInstance {
  ControlGrid w;
  GradientVector g;
  double alpha = 0.0;
  double radius = 0.0;

  [[nodiscard]] const TimeGrid& grid() const { return w.grid(); }
  [[nodiscard]] const LevelSet& levels() const { return w.levels(); }

  void validate() const {
    if (g.size() != w.size()) throw StructuralError("TrInstance: gradient length mismatch");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("TrInstance: alpha >= 0");
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw std::invalid_argument("TrInstance: radius must be positive and finite");
  }

  /// Integer L1 budget: floor(Delta/dt) with a guard for Delta = m*dt, capped at the
  /// largest useful value N * (max W - min W).
  [[nodiscard]] std::int64_t budget_units() const {
    const double raw = std::floor(radius / grid().dt() + 1e-9);
    const double cap = static_cast<double>(w.size()) * (levels().max() - levels().min());
    return static_cast<std::int64_t>(std::min(raw, cap));
  }
};

struct TrSolution {
  std::vector<int> d;
  double predicted_reduction = 0.0;
  std::int64_t budget_used = 0;
};

/// -(dt * sum g_i d_i + alpha * (TV(w+d) - TV(w))).
inline double predicted_reduction(const TrInstance& inst, std::span<const int> d) {
  if (d.size() != inst.w.size()) throw StructuralError("predicted_reduction: step length mismatch");
  std::vector<int> next(d.size());
  double lin = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    next[i] = inst.w[i] + d[i];
    if (!inst.levels().contains(next[i]))
      throw std::invalid_argument("predicted_reduction: w + d leaves W at cell " + std::to_string(i));
    lin += inst.g[i] * d[i];
  }
  const double tv_change = static_cast<double>(jump_tv(next) - jump_tv(inst.w));
  return -(inst.grid().dt() * lin + inst.alpha * tv_change);
}

/// Global minimiser of the subproblem. Ties are broken toward the smaller total budget, then
/// lexicographically toward d_i = 0 from the first cell on, then toward lower levels.
/// `table_dump`, when given, receives the value table as `cell,level,budget,value` rows.
inline TrSolution solve_dp(const TrInstance& inst, std::ostream* table_dump = nullptr) {
  inst.validate();
  const auto n = static_cast<std::ptrdiff_t>(inst.w.size());
  const auto& lv = inst.levels();
  const auto nl = static_cast<std::ptrdiff_t>(lv.size());
  const std::int64_t budget = inst.budget_units();
  const auto nb = static_cast<std::ptrdiff_t>(budget + 1);
  const double dt = inst.grid().dt();
  const double inf = std::numeric_limits<double>::infinity();

  // value[(i*nl + v)*nb + c]: best cost of cells i..N-1 when cell i takes level v and those
  // cells consume exactly c budget units. choice[...] is the level index chosen for cell i+1.
  std::vector<double> value(static_cast<std::size_t>(n * nl * nb), inf);
  std::vector<int> choice(value.size(), -1);
  auto at = [&](std::ptrdiff_t i, std::ptrdiff_t v, std::ptrdiff_t c) {
    return static_cast<std::size_t>((i * nl + v) * nb + c);
  };
  auto move_units = [&](std::ptrdiff_t i, std::ptrdiff_t v) {
    return static_cast<std::ptrdiff_t>(std::abs(lv[static_cast<std::size_t>(v)] - inst.w[static_cast<std::size_t>(i)]));
  };
  auto stage = [&](std::ptrdiff_t i, std::ptrdiff_t v) {
    return dt * inst.g[static_cast<std::size_t>(i)] *
           (lv[static_cast<std::size_t>(v)] - inst.w[static_cast<std::size_t>(i)]);
  };
  auto interface = [&](std::ptrdiff_t i, std::ptrdiff_t v, std::ptrdiff_t vn) {
    const int old_jump = std::abs(inst.w[static_cast<std::size_t>(i + 1)] - inst.w[static_cast<std::size_t>(i)]);
    const int new_jump = std::abs(lv[static_cast<std::size_t>(vn)] - lv[static_cast<std::size_t>(v)]);
    return inst.alpha * static_cast<double>(new_jump - old_jump);
  };
  // Preference order of level indices at cell i: keep the current level first, then ascending.
  auto preference = [&](std::ptrdiff_t i) {
    std::vector<std::ptrdiff_t> order;
    const auto keep = static_cast<std::ptrdiff_t>(lv.index_of(inst.w[static_cast<std::size_t>(i)]));
    order.push_back(keep);
    for (std::ptrdiff_t v = 0; v < nl; ++v)
      if (v != keep) order.push_back(v);
    return order;
  };

  for (std::ptrdiff_t i = n - 1; i >= 0; --i) {
    const auto next_order = i + 1 < n ? preference(i + 1) : std::vector<std::ptrdiff_t>{};
    for (std::ptrdiff_t v = 0; v < nl; ++v) {
      const auto units = move_units(i, v);
      if (units > budget) continue;
      const double own = stage(i, v);
      for (std::ptrdiff_t c = units; c < nb; ++c) {
        const std::ptrdiff_t rest = c - units;
        if (i == n - 1) {
          if (rest == 0) value[at(i, v, c)] = own;
          continue;
        }
        double best = inf;
        int arg = -1;
        for (auto vn : next_order) {
          const double tail = value[at(i + 1, vn, rest)];
          if (tail == inf) continue;
          const double cand = interface(i, v, vn) + tail;
          if (cand < best) {
            best = cand;
            arg = static_cast<int>(vn);
          }
        }
        if (arg >= 0) {
          value[at(i, v, c)] = own + best;
          choice[at(i, v, c)] = arg;
        }
      }
    }
  }

  if (table_dump) {
    *table_dump << "cell,level,budget,value\n" << std::setprecision(17);
    for (std::ptrdiff_t i = 0; i < n; ++i)
      for (std::ptrdiff_t v = 0; v < nl; ++v)
        for (std::ptrdiff_t c = 0; c < nb; ++c)
          if (value[at(i, v, c)] < inf)
            *table_dump << i << ',' << lv[static_cast<std::size_t>(v)] << ',' << c << ','
                        << value[at(i, v, c)] << '\n';
  }

  // Start: minimal cost, then smaller budget, then keep cell 0, then ascending level.
  double best = inf;
  std::ptrdiff_t bv = -1, bc = -1;
  for (std::ptrdiff_t c = 0; c < nb; ++c) {
    for (auto v : preference(0)) {
      const double val = value[at(0, v, c)];
      if (val < best) {
        best = val;
        bv = v;
        bc = c;
      }
    }
  }
  if (bv < 0) throw std::logic_error("solve_dp: no feasible step (d = 0 should always be feasible)");

  TrSolution sol;
  sol.d.resize(static_cast<std::size_t>(n));
  sol.budget_used = bc;
  std::ptrdiff_t v = bv, c = bc;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    sol.d[static_cast<std::size_t>(i)] = lv[static_cast<std::size_t>(v)] - inst.w[static_cast<std::size_t>(i)];
    if (i + 1 == n) break;
    const std::ptrdiff_t rest = c - move_units(i, v);
    v = choice[at(i, v, c)];
    c = rest;
  }
  sol.predicted_reduction = predicted_reduction(inst, sol.d);
  if (sol.predicted_reduction < 0.0) {
    // Roundoff in the DP sums ranked a near-tie above d = 0; keep the exact zero step.
    std::fill(sol.d.begin(), sol.d.end(), 0);
    sol.predicted_reduction = 0.0;
    sol.budget_used = 0;
  }
  return sol;
}

}  // namespace poroslip
