#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "poroslip/slip.hpp"

using namespace poroslip;

namespace {

const LevelSet kLevels({-7, -5, -3, -1, 0, 2});

// j(w) = 1/2 * int (w - target)^2 dt
struct Quadratic {
  std::vector<int> target;
  double tv_weight = 0.0;
  double dt = 0.0;

  double value(const ControlGrid& w) const {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += 0.5 * dt * std::pow(w[i] - target[i], 2);
    return s;
  }
  GradientVector gradient(const ControlGrid& w) const {
    GradientVector g;
    for (std::size_t i = 0; i < w.size(); ++i) g.values.push_back(w[i] - target[i]);
    return g;
  }
  double alpha() const { return tv_weight; }
};

// j(w) = int c w dt, so the subproblem model is exact.
struct Linear {
  std::vector<double> c;
  double tv_weight = 0.0;
  double dt = 0.0;

  double value(const ControlGrid& w) const {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += dt * c[i] * w[i];
    return s;
  }
  GradientVector gradient(const ControlGrid&) const { return GradientVector{c}; }
  double alpha() const { return tv_weight; }
};

static_assert(SlipObjective<Quadratic>);
static_assert(SlipObjective<Linear>);

std::vector<int> random_levels(std::size_t n, std::mt19937& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, kLevels.size() - 1);
  std::vector<int> v(n);
  int cur = kLevels[pick(rng)];
  for (auto& x : v) {
    if (rng() % 6 == 0) cur = kLevels[pick(rng)];
    x = cur;
  }
  return v;
}

void expect_report_invariants(const SlipReport& rep, const SlipConfig& cfg, double dt, double alpha,
                              const std::function<double(const ControlGrid&)>& full) {
  for (std::size_t k = 1; k < rep.iterates.size(); ++k) EXPECT_LT(full(rep.iterates[k]), full(rep.iterates[k - 1]));
  double accepted_pred = 0.0;
  for (const auto& r : rep.records) {
    if (r.accepted) {
      EXPECT_GE(r.actual, cfg.sigma * r.predicted);
      accepted_pred += r.predicted;
    }
  }
  const double total = full(rep.iterates.front()) - full(rep.final_control);
  EXPECT_GE(total + 1e-12, cfg.sigma * accepted_pred);
  const int bound = static_cast<int>(std::ceil(std::log2(cfg.delta0 / cfg.min_radius.value_or(dt)))) + 1;
  EXPECT_LE(rep.max_inner, bound);
  for (const auto& w : rep.iterates)
    for (int v : w.values()) EXPECT_TRUE(kLevels.contains(v));
  EXPECT_NEAR(rep.final_objective, full(rep.final_control), 1e-14);
  (void)alpha;
}

}  // namespace

TEST(RunSlip, QuadraticReachesFeasibleTarget) {
  std::mt19937 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const TimeGrid grid(0.5, 64);
    const Quadratic q{random_levels(64, rng), 1e-5, grid.dt()};
    const ControlGrid w0 = ControlGrid::constant(grid, kLevels, -7);
    SlipConfig cfg;
    const auto out = run_slip(cfg, q, w0);
    EXPECT_EQ(out.final_control.values().size(), 64u);
    EXPECT_EQ(std::vector<int>(out.final_control.values().begin(), out.final_control.values().end()), q.target);
    EXPECT_EQ(out.reason, Termination::zero_pred_red);
    EXPECT_EQ(out.final_instationarity, 0.0);
    auto full = [&](const ControlGrid& w) { return q.value(w) + q.alpha() * static_cast<double>(jump_tv(w)); };
    expect_report_invariants(out, cfg, grid.dt(), q.alpha(), full);
  }
}

TEST(RunSlip, StationaryStartTerminatesImmediately) {
  const TimeGrid grid(0.5, 32);
  const Quadratic q{std::vector<int>(32, 0), 1e-3, grid.dt()};
  const auto w0 = ControlGrid::constant(grid, kLevels, 0);
  const auto out = run_slip(SlipConfig{}, q, w0);
  EXPECT_EQ(out.outer_iterations, 1);
  EXPECT_EQ(out.max_inner, 1);
  EXPECT_TRUE(out.records.empty());
  EXPECT_EQ(out.final_control, w0);
  EXPECT_EQ(out.iterates.size(), 1u);
  EXPECT_EQ(out.reason, Termination::zero_pred_red);
}

TEST(RunSlip, BelowThresholdTerminatesImmediately) {
  const TimeGrid grid(0.5, 32);
  std::vector<int> target(32, 0);
  target[5] = 2;
  const Quadratic q{target, 0.0, grid.dt()};
  const auto w0 = ControlGrid::constant(grid, kLevels, 0);
  SlipConfig cfg;
  cfg.min_pred_red = 1.0;  // far above the reachable model decrease
  const auto out = run_slip(cfg, q, w0);
  EXPECT_EQ(out.reason, Termination::pred_red_below_C2);
  EXPECT_EQ(out.final_control, w0);
  EXPECT_EQ(out.outer_iterations, 1);
}

TEST(ActualReduction, ZeroStepAndExactModel) {
  std::mt19937 rng(6);
  std::normal_distribution<double> gn;
  const TimeGrid grid(0.5, 24);
  std::vector<double> c(24);
  for (auto& x : c) x = gn(rng);
  const Linear lin{c, 0.01, grid.dt()};
  const ControlGrid w(grid, kLevels, random_levels(24, rng));
  EXPECT_EQ(actual_reduction(lin, w, std::vector<int>(24, 0)), 0.0);
  for (double radius : {0.05, 0.2, 1.0}) {
    const TrInstance inst{w, lin.gradient(w), lin.alpha(), radius};
    const auto sol = solve_dp(inst);
    EXPECT_NEAR(actual_reduction(lin, w, sol.d), sol.predicted_reduction, 1e-13);
  }
}

TEST(ActualReduction, NegativeForStepAgainstCurvature) {
  const TimeGrid grid(1.0, 1);
  const Quadratic q{{-1}, 0.0, 1.0};
  const auto w = ControlGrid::constant(grid, kLevels, 0);
  // gradient +1 points downward, but jumping to -7 overshoots the minimiser at -1
  EXPECT_LT(actual_reduction(q, w, std::vector<int>{-7}), 0.0);
  SlipConfig cfg;
  cfg.delta0 = 8.0;
  const auto out = run_slip(cfg, q, w);
  EXPECT_FALSE(out.records.front().accepted);
  EXPECT_EQ(out.final_control[0], -1);
}

TEST(RunSlip, LinearObjectiveAcceptsEveryStep) {
  std::mt19937 rng(10);
  std::normal_distribution<double> gn;
  const TimeGrid grid(0.5, 48);
  std::vector<double> c(48);
  for (auto& x : c) x = gn(rng);
  const Linear lin{c, 1e-3, grid.dt()};
  const auto out = run_slip(SlipConfig{}, lin, ControlGrid::constant(grid, kLevels, 0));
  for (const auto& r : out.records) {
    EXPECT_TRUE(r.accepted);
    EXPECT_NEAR(r.ratio, 1.0, 1e-9);
  }
  EXPECT_EQ(out.reason, Termination::zero_pred_red);
}

TEST(RunSlip, RadiusCollapseAndInnerBound) {
  // A stiff quadratic whose model overshoots at all but the smallest radii.
  struct Stiff {
    double dt;
    double value(const ControlGrid& w) const {
      double s = 0.0, tot = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) tot += dt * (w[i] + 0.3217);
      s = 50.0 * tot * tot;
      return s;
    }
    GradientVector gradient(const ControlGrid& w) const {
      double tot = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) tot += dt * (w[i] + 0.3217);
      return GradientVector{std::vector<double>(w.size(), 100.0 * tot)};
    }
    double alpha() const { return 0.0; }
  };
  const TimeGrid grid(0.5, 40);
  const Stiff s{grid.dt()};
  SlipConfig cfg;
  // at one budget unit only the -1 <-> 0 move exists, so stop the contraction one step earlier
  cfg.min_radius = 2.0 * grid.dt();
  const auto out = run_slip(cfg, s, ControlGrid::constant(grid, kLevels, 2));
  EXPECT_EQ(out.reason, Termination::radius_collapse);
  EXPECT_LE(out.max_inner, static_cast<int>(std::ceil(std::log2(cfg.delta0 / grid.dt()))) + 1);
  auto full = [&](const ControlGrid& w) { return s.value(w); };
  expect_report_invariants(out, cfg, grid.dt(), 0.0, full);
}

TEST(RunSlip, MaxOuterCap) {
  const TimeGrid grid(0.5, 64);
  const Quadratic q{std::vector<int>(64, 2), 0.0, grid.dt()};
  SlipConfig cfg;
  cfg.max_outer = 2;
  const auto out = run_slip(cfg, q, ControlGrid::constant(grid, kLevels, -7));
  EXPECT_EQ(out.reason, Termination::max_outer);
  EXPECT_EQ(out.outer_iterations, 2);
  EXPECT_EQ(out.iterates.size(), 3u);
  EXPECT_GT(out.final_instationarity, 0.0);
}

TEST(RunSlip, DeterministicAndLogsKeyValueLines) {
  std::mt19937 rng(44);
  const TimeGrid grid(0.5, 64);
  const Quadratic q{random_levels(64, rng), 1e-4, grid.dt()};
  auto once = [&](std::ostringstream& log) {
    SlipConfig cfg;
    cfg.verbosity = 1;
    cfg.log = &log;
    cfg.tag = "toy";
    return run_slip(cfg, q, ControlGrid::constant(grid, kLevels, 0));
  };
  std::ostringstream l1, l2;
  const auto a = once(l1), b = once(l2);
  EXPECT_EQ(l1.str(), l2.str());
  EXPECT_EQ(a.final_control, b.final_control);
  EXPECT_EQ(a.final_objective, b.final_objective);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].predicted, b.records[k].predicted);
    EXPECT_EQ(a.records[k].actual, b.records[k].actual);
  }
  std::istringstream lines(l1.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    ++n;
    EXPECT_EQ(line.rfind("stage=toy ", 0), 0u) << line;
  }
  EXPECT_EQ(n, static_cast<int>(a.records.size()) + 1);
  EXPECT_NE(l1.str().find("done reason=zero_pred_red"), std::string::npos);
}

TEST(SlipConfig, Validation) {
  const double dt = 0.01;
  auto bad = [&](auto mutate) {
    SlipConfig c;
    mutate(c);
    EXPECT_THROW(c.validate(dt), std::invalid_argument);
  };
  bad([](SlipConfig& c) { c.sigma = 0.0; });
  bad([](SlipConfig& c) { c.sigma = 1.0; });
  bad([](SlipConfig& c) { c.delta0 = 0.0; });
  bad([](SlipConfig& c) { c.delta0 = 0.005; });
  bad([](SlipConfig& c) { c.min_radius = 0.2; });
  bad([](SlipConfig& c) { c.min_radius = -1.0; });
  bad([](SlipConfig& c) { c.min_pred_red = -1e-9; });
  bad([](SlipConfig& c) { c.max_outer = 0; });
  EXPECT_NO_THROW(SlipConfig{}.validate(dt));
  EXPECT_STREQ(to_string(Termination::pred_red_below_C2), "pred_red_below_C2");
}
