#pragma once

// Warm-started SLIP runs along a decreasing smoothing schedule eps_1 > ... > eps_K = 0.

#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "poroslip/objective.hpp"
#include "poroslip/slip.hpp"

namespace poroslip {

inline std::vector<double> default_schedule() {
  return {1.6e-2, 8e-3, 4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4, 0.0};
}

struct HomotopyConfig {
  std::vector<double> schedule = default_schedule();
  std::optional<double> a;  // defaults to (1 - sigma) / 2
  /// Stage termination radius for eps > 0, given (eps, dt). Default max(dt, eps/4).
  std::function<double(double, double)> radius_rule;

  [[nodiscard]] double a_for(double sigma) const { return a.value_or(0.5 * (1.0 - sigma)); }

  [[nodiscard]] double stage_radius(double eps, double dt) const {
    if (eps == 0.0) return dt;
    return radius_rule ? radius_rule(eps, dt) : std::max(dt, eps / 4.0);
  }

  void validate(double sigma) const {
    if (schedule.empty() || schedule.back() != 0.0)
      throw std::invalid_argument("HomotopyConfig: schedule must end in 0");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (!(schedule[i] >= 0.0)) throw std::invalid_argument("HomotopyConfig: negative epsilon");
      if (i > 0 && !(schedule[i] < schedule[i - 1]))
        throw std::invalid_argument("HomotopyConfig: schedule must be strictly decreasing");
    }
    const double av = a_for(sigma);
    if (!(av > 0.0 && av <= 1.0 - sigma)) throw std::invalid_argument("HomotopyConfig: need 0 < a <= 1 - sigma");
  }
};

struct StageReport {
  double epsilon = 0.0;
  SlipReport slip;
  double objective_at_stage = 0.0;  // j_eps + alpha TV at this stage's eps
  double objective_at_zero = 0.0;   // j + alpha TV
};

struct HomotopyReport {
  std::vector<StageReport> stages;
  int cumulative_outer = 0;
  ControlGrid final_control;
  double final_objective = 0.0;  // at eps = 0
  double final_instationarity = 0.0;
};

inline HomotopyReport run_homotopy(const HomotopyConfig& hcfg, const SlipConfig& scfg, const Objective& obj,
                                   const ControlGrid& w0) {
  hcfg.validate(scfg.sigma);
  const double dt = w0.grid().dt();
  const double alpha = obj.alpha();
  const double c2 = (1.0 - 0.75 * hcfg.a_for(scfg.sigma)) * alpha;
  const Objective plain = obj.with_epsilon(0.0);

  HomotopyReport rep{.stages = {},
                     .cumulative_outer = 0,
                     .final_control = w0,
                     .final_objective = 0.0,
                     .final_instationarity = 0.0};
  ControlGrid w = w0;
  for (double eps : hcfg.schedule) {
    SlipConfig stage_cfg = scfg;
    stage_cfg.min_radius = hcfg.stage_radius(eps, dt);
    stage_cfg.min_pred_red = eps > 0.0 ? c2 : 0.0;
    std::ostringstream tag;
    tag << eps;
    stage_cfg.tag = scfg.tag.empty() ? "eps=" + tag.str() : scfg.tag + ",eps=" + tag.str();
    const Objective stage_obj = eps == 0.0 ? plain : obj.with_epsilon(eps);

    StageReport st{.epsilon = eps,
                   .slip = run_slip(stage_cfg, stage_obj, w),
                   .objective_at_stage = 0.0,
                   .objective_at_zero = 0.0};
    w = st.slip.final_control;
    st.objective_at_stage = st.slip.final_objective;
    st.objective_at_zero =
        eps == 0.0 ? st.slip.final_objective : plain.value(w) + alpha * static_cast<double>(jump_tv(w));
    rep.cumulative_outer += st.slip.outer_iterations;
    rep.stages.push_back(std::move(st));
  }
  rep.final_control = w;
  rep.final_objective = rep.stages.back().objective_at_zero;
  rep.final_instationarity = rep.stages.back().slip.final_instationarity;
  return rep;
}

}  // namespace poroslip
