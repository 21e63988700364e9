#pragma once

// Sequential linear integer programming: a trust-region loop whose subproblems are solved
// exactly by solve_dp. The radius is reset to delta0 at every outer iteration and halved
// on rejection.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "poroslip/control.hpp"
#include "poroslip/objective.hpp"
#include "poroslip/trsub.hpp"

namespace poroslip {

/// Anything SLIP can minimise: a smooth part j with gradient, plus alpha * TV.
template <class T>
concept SlipObjective = requires(const T& obj, const ControlGrid& w) {
  { obj.value(w) } -> std::convertible_to<double>;
  { obj.gradient(w) } -> std::convertible_to<GradientVector>;
  { obj.alpha() } -> std::convertible_to<double>;
};

enum class Termination { zero_pred_red, radius_collapse, pred_red_below_C2, max_outer };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::zero_pred_red: return "zero_pred_red";
    case Termination::radius_collapse: return "radius_collapse";
    case Termination::pred_red_below_C2: return "pred_red_below_C2";
    case Termination::max_outer: return "max_outer";
  }
  return "unknown";
}

struct SlipConfig {
  double delta0 = 0.125;
  double sigma = 1e-3;
  std::optional<double> min_radius;  // C1; defaults to dt of the control grid
  double min_pred_red = 0.0;         // C2
  int max_outer = 10000;
  int verbosity = 0;
  std::ostream* log = nullptr;  // key=value lines when verbosity >= 1
  std::string tag;              // prefixed to log lines

  void validate(double dt) const {
    if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("SlipConfig: sigma must lie in (0,1)");
    if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw std::invalid_argument("SlipConfig: delta0 > 0");
    const double c1 = min_radius.value_or(dt);
    if (c1 < 0.0) throw std::invalid_argument("SlipConfig: min_radius >= 0");
    if (!(delta0 > c1)) throw std::invalid_argument("SlipConfig: delta0 must exceed min_radius");
    if (min_pred_red < 0.0) throw std::invalid_argument("SlipConfig: min_pred_red >= 0");
    if (max_outer < 1) throw std::invalid_argument("SlipConfig: max_outer >= 1");
  }
};

struct IterationRecord {
  int outer = 0;
  int inner = 0;
  double radius = 0.0;
  double predicted = 0.0;
  double actual = 0.0;
  double ratio = 0.0;
  bool accepted = false;
};

struct SlipReport {
  std::vector<ControlGrid> iterates;  // w0 followed by every accepted iterate
  std::vector<IterationRecord> records;
  ControlGrid final_control;
  double final_j = 0.0;          // smooth part j(w)
  double final_objective = 0.0;  // j(w) + alpha * TV(w)
  double final_instationarity = 0.0;
  GradientVector final_gradient;
  int outer_iterations = 0;  // outer loop entries, including the one that terminates
  int max_inner = 0;
  Termination reason = Termination::max_outer;
};

/// j(w) + alpha TV(w) - j(w + d) - alpha TV(w + d).
template <SlipObjective Obj>
double actual_reduction(const Obj& obj, const ControlGrid& w, std::span<const int> d) {
  const ControlGrid next = w.plus(d);
  const double a = obj.alpha();
  return obj.value(w) + a * static_cast<double>(jump_tv(w)) - obj.value(next) -
         a * static_cast<double>(jump_tv(next));
}

template <SlipObjective Obj>
SlipReport run_slip(const SlipConfig& cfg, const Obj& obj, const ControlGrid& w0) {
  const double dt = w0.grid().dt();
  cfg.validate(dt);
  const double c1 = cfg.min_radius.value_or(dt);
  const double alpha = obj.alpha();
  auto full = [&](const ControlGrid& w, double j) { return j + alpha * static_cast<double>(jump_tv(w)); };
  auto say = [&](const std::string& line) {
    if (cfg.verbosity >= 1 && cfg.log) *cfg.log << (cfg.tag.empty() ? "" : "stage=" + cfg.tag + " ") << line << '\n';
  };

  SlipReport rep{.iterates = {w0},
                 .records = {},
                 .final_control = w0,
                 .final_j = 0.0,
                 .final_objective = 0.0,
                 .final_instationarity = 0.0,
                 .final_gradient = {},
                 .outer_iterations = 0,
                 .max_inner = 0,
                 .reason = Termination::max_outer};
  ControlGrid w = w0;
  double j = obj.value(w);
  double f = full(w, j);
  std::optional<GradientVector> g;
  bool done = false;

  while (!done) {
    if (rep.outer_iterations >= cfg.max_outer) {
      rep.reason = Termination::max_outer;
      break;
    }
    const int n = ++rep.outer_iterations;
    g = obj.gradient(w);
    double radius = cfg.delta0;
    for (int k = 1;; ++k) {
      rep.max_inner = std::max(rep.max_inner, k);
      const TrSolution sol = solve_dp(TrInstance{w, *g, alpha, radius});
      const double pred = sol.predicted_reduction;
      if (pred <= 1e-15) {
        rep.reason = Termination::zero_pred_red;
        done = true;
        break;
      }
      if (pred < cfg.min_pred_red) {
        rep.reason = Termination::pred_red_below_C2;
        done = true;
        break;
      }
      const ControlGrid trial = w.plus(sol.d);
      const double j_trial = obj.value(trial);
      const double f_trial = full(trial, j_trial);
      IterationRecord rec{n, k, radius, pred, f - f_trial, (f - f_trial) / pred, false};
      rec.accepted = rec.ratio >= cfg.sigma;
      rep.records.push_back(rec);
      {
        std::ostringstream line;
        line.precision(10);
        line << "outer=" << n << " inner=" << k << " radius=" << radius << " pred=" << pred
             << " ared=" << rec.actual << " ratio=" << rec.ratio << " accept=" << rec.accepted
             << " obj=" << (rec.accepted ? f_trial : f);
        say(line.str());
      }
      if (rec.accepted) {
        w = trial;
        j = j_trial;
        f = f_trial;
        g.reset();
        rep.iterates.push_back(w);
        break;
      }
      radius *= 0.5;
      if (radius < c1) {
        rep.reason = Termination::radius_collapse;
        done = true;
        break;
      }
    }
  }

  if (!g) g = obj.gradient(w);
  rep.final_control = w;
  rep.final_j = j;
  rep.final_objective = f;
  rep.final_gradient = *g;
  rep.final_instationarity = instationarity(w, *g);
  {
    std::ostringstream line;
    line.precision(10);
    line << "done reason=" << to_string(rep.reason) << " outer=" << rep.outer_iterations
         << " obj=" << f << " instat=" << rep.final_instationarity << " tv=" << jump_tv(w);
    say(line.str());
  }
  return rep;
}

}  // namespace poroslip
