#pragma once

// Experiment orchestration: one row = one (input, delta, lambda, init, mode) run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "poroslip/homotopy.hpp"
#include "poroslip/objective.hpp"
#include "poroslip/slip.hpp"

namespace poroslip {

enum class RunMode { unreg, homotopy };

inline std::string to_string(RunMode m) { return m == RunMode::unreg ? "unreg" : "homotopy"; }

inline RunMode parse_mode(const std::string& s) {
  if (s == "unreg") return RunMode::unreg;
  if (s == "homotopy") return RunMode::homotopy;
  throw std::invalid_argument("unknown mode '" + s + "' (expected unreg or homotopy)");
}

struct ExperimentSpec {
  PdeParams pde;            // pde.cells is M, pde.delta the viscoelastic switch
  double horizon = 0.5;     // T
  int n_time = 128;         // N
  std::vector<int> levels = {-7, -5, -3, -1, 0, 2};
  double alpha = 5e-5;
  double lambda = 0.0;
  std::string input = "psi";  // "psi" (boundary flux) or "S" (source with chi = 1)
  int init = 1;               // w0 = levels[init - 1]
  RunMode mode = RunMode::unreg;
  double delta0 = 0.125;
  double sigma = 1e-3;
  int max_outer = 10000;
  std::vector<double> schedule = default_schedule();
  std::optional<double> homotopy_a;
  std::filesystem::path out_dir = "out";
  int verbosity = 1;
  bool dump_pde = false;  // final state as debug/<tag>_state.csv
  bool dump_dp = false;   // DP table of the first subproblem as debug/<tag>_dp0.csv

  void validate() const {
    pde.validate();
    if (n_time < 1) throw std::invalid_argument("ExperimentSpec: n_time >= 1");
    if (input != "psi" && input != "S") throw std::invalid_argument("ExperimentSpec: input must be psi or S");
    if (init < 1 || init > static_cast<int>(levels.size()))
      throw std::invalid_argument("ExperimentSpec: init must index a level (1-based)");
    (void)LevelSet(levels);
  }

  [[nodiscard]] std::string tag() const {
    std::ostringstream os;
    os << input << "_d" << pde.delta << "_lam" << lambda << "_i" << init << '_' << to_string(mode);
    return os.str();
  }

  [[nodiscard]] TimeGrid grid() const { return {horizon, static_cast<std::size_t>(n_time)}; }

  [[nodiscard]] ObjectiveConfig objective_config() const {
    ObjectiveConfig c;
    c.alpha = alpha;
    c.lambda = lambda;
    c.pde = pde;
    c.input = input == "psi" ? InputKind::boundary_flux()
                             : InputKind::distributed_source(pde, [](double) { return 1.0; });
    return c;
  }

  [[nodiscard]] SlipConfig slip_config() const {
    SlipConfig s;
    s.delta0 = delta0;
    s.sigma = sigma;
    s.max_outer = max_outer;
    s.verbosity = verbosity;
    return s;
  }
};

struct SummaryRow {
  std::string input;
  double delta = 0.0;
  double lambda = 0.0;
  int init = 0;
  RunMode mode = RunMode::unreg;
  double final_obj = std::nan("");
  double final_instat = std::nan("");
  int outer_iters = 0;  // cumulative over stages for homotopy rows
  double wall_time = 0.0;
  bool failed = false;
  std::string error;
  std::string tag;
};

inline const char* summary_header() {
  return "input,delta,lambda,init,mode,final_obj,final_instat,outer_iters,wall_time,failed\n";
}

inline void write_summary_row(std::ostream& os, const SummaryRow& r) {
  std::ostringstream line;
  line << r.input << ',' << std::setprecision(6) << r.delta << ',' << r.lambda << ',' << r.init << ','
       << to_string(r.mode) << ',' << r.final_obj << ',' << std::scientific << std::setprecision(1)
       << r.final_instat << ',' << std::defaultfloat << r.outer_iters << ',' << std::fixed
       << std::setprecision(2) << r.wall_time << ',' << (r.failed ? 1 : 0) << '\n';
  os << line.str();
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << summary_header();
  for (const auto& r : rows) write_summary_row(os, r);
}

namespace detail {
inline std::ofstream open_out(const std::filesystem::path& p) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  return f;
}
}  // namespace detail

/// Runs one row and writes controls/<tag>.csv and logs/<tag>.log below spec.out_dir.
/// Solver failures are caught and reported through the row's failure flag.
inline SummaryRow run_experiment(const ExperimentSpec& spec) {
  SummaryRow row;
  row.input = spec.input;
  row.delta = spec.pde.delta;
  row.lambda = spec.lambda;
  row.init = spec.init;
  row.mode = spec.mode;
  row.tag = spec.tag();
  const auto t0 = std::chrono::steady_clock::now();
  std::ofstream log;
  try {
    log = detail::open_out(spec.out_dir / "logs" / (row.tag + ".log"));
    spec.validate();
    const TimeGrid grid = spec.grid();
    const LevelSet levels(spec.levels);
    const Objective obj(spec.objective_config(), grid);
    const auto w0 = ControlGrid::constant(grid, levels, levels[static_cast<std::size_t>(spec.init - 1)]);
    SlipConfig scfg = spec.slip_config();
    scfg.log = &log;

    if (spec.dump_dp) {
      auto f = detail::open_out(spec.out_dir / "debug" / (row.tag + "_dp0.csv"));
      (void)solve_dp(TrInstance{w0, obj.gradient(w0), obj.alpha(), spec.delta0}, &f);
    }

    ControlGrid final_w = w0;
    if (spec.mode == RunMode::unreg) {
      const auto rep = run_slip(scfg, obj, w0);
      final_w = rep.final_control;
      row.final_obj = rep.final_objective;
      row.final_instat = rep.final_instationarity;
      row.outer_iters = rep.outer_iterations;
    } else {
      HomotopyConfig h;
      h.schedule = spec.schedule;
      h.a = spec.homotopy_a;
      const auto rep = run_homotopy(h, scfg, obj, w0);
      final_w = rep.final_control;
      row.final_obj = rep.final_objective;
      row.final_instat = rep.final_instationarity;
      row.outer_iters = rep.cumulative_outer;
    }
    auto cf = detail::open_out(spec.out_dir / "controls" / (row.tag + ".csv"));
    write_control_csv(cf, final_w);
    if (spec.dump_pde) {
      auto f = detail::open_out(spec.out_dir / "debug" / (row.tag + "_state.csv"));
      obj.state(final_w.as_real()).write_csv(f);
    }
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    if (log) log << "error=" << std::quoted(row.error) << '\n';
  }
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

/// Grid description read from JSON. Each axis is a list; the rows are their product.
struct GridConfig {
  ExperimentSpec base;
  std::vector<std::string> inputs;
  std::vector<double> deltas;
  std::vector<double> lambdas;
  std::vector<int> inits;
  std::vector<RunMode> modes;

  /// Rows ordered as in the result tables: input, delta, init, lambda, mode.
  [[nodiscard]] std::vector<ExperimentSpec> expand() const {
    std::vector<ExperimentSpec> out;
    for (const auto& in : inputs)
      for (double d : deltas)
        for (int i : inits)
          for (double l : lambdas)
            for (RunMode m : modes) {
              ExperimentSpec s = base;
              s.input = in;
              s.pde.delta = d;
              s.init = i;
              s.lambda = l;
              s.mode = m;
              out.push_back(s);
            }
    return out;
  }
};

/// Parses a config document. `profile` selects an entry of "profiles" whose keys override
/// the top level (typically n_time and m_space).
inline GridConfig parse_grid_config(const nlohmann::json& doc, const std::string& profile) {
  using nlohmann::json;
  json merged = doc;
  if (doc.contains("profiles")) {
    const auto& profiles = doc.at("profiles");
    if (!profiles.contains(profile)) throw std::invalid_argument("config has no profile '" + profile + "'");
    for (const auto& [k, v] : profiles.at(profile).items()) merged[k] = v;
  } else if (profile != "ci") {
    throw std::invalid_argument("config has no profiles section");
  }

  GridConfig g;
  auto& b = g.base;
  b.horizon = merged.value("horizon", b.horizon);
  b.n_time = merged.value("n_time", b.n_time);
  b.pde.cells = merged.value("m_space", 128);
  b.pde.length = merged.value("length", b.pde.length);
  if (merged.contains("pde")) {
    const auto& p = merged.at("pde");
    b.pde.lambda_e = p.value("lambda_e", b.pde.lambda_e);
    b.pde.mu_e = p.value("mu_e", b.pde.mu_e);
    b.pde.lambda_v = p.value("lambda_v", b.pde.lambda_v);
    b.pde.mu_v = p.value("mu_v", b.pde.mu_v);
    b.pde.k = p.value("k", b.pde.k);
  }
  b.levels = merged.value("levels", b.levels);
  b.alpha = merged.value("alpha", b.alpha);
  b.delta0 = merged.value("delta0", 0.25 * b.horizon);
  b.sigma = merged.value("sigma", b.sigma);
  b.max_outer = merged.value("max_outer", b.max_outer);
  b.schedule = merged.value("schedule", b.schedule);
  if (merged.contains("homotopy_a")) b.homotopy_a = merged.at("homotopy_a").get<double>();

  const json grid = merged.value("grid", json::object());
  g.inputs = grid.value("input", std::vector<std::string>{});
  g.deltas = grid.value("delta", std::vector<double>{});
  g.lambdas = grid.value("lambda", std::vector<double>{});
  g.inits = grid.value("init", std::vector<int>{});
  for (const auto& m : grid.value("mode", std::vector<std::string>{})) g.modes.push_back(parse_mode(m));
  for (const auto& in : g.inputs)
    if (in != "psi" && in != "S") throw std::invalid_argument("grid.input entries must be psi or S");
  return g;
}

/// Runs every spec on up to `jobs` worker threads; rows come back in input order.
inline std::vector<SummaryRow> run_grid(const std::vector<ExperimentSpec>& specs, int jobs) {
  std::vector<SummaryRow> rows(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) rows[i] = run_experiment(specs[i]);
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  return rows;
}

/// Writes summary.csv below out_dir. Returns the number of failed rows.
inline int write_grid_outputs(const std::filesystem::path& out_dir, const std::vector<SummaryRow>& rows) {
  auto f = detail::open_out(out_dir / "summary.csv");
  write_summary(f, rows);
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.failed; }));
}

}  // namespace poroslip
