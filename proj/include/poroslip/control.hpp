#pragma once

// W-valued piecewise-constant controls on a uniform time grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace poroslip {

/// Thrown when two objects that must share a grid (or level set) do not.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Finite, strictly increasing set of admissible integer control levels.
class LevelSet {
 public:
  LevelSet() = default;
  explicit LevelSet(std::vector<int> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw std::invalid_argument("LevelSet: empty level set");
    for (std::size_t i = 1; i < levels_.size(); ++i) {
      if (levels_[i] <= levels_[i - 1])
        throw std::invalid_argument("LevelSet: levels must be strictly increasing");
    }
  }

  [[nodiscard]] std::span<const int> levels() const { return levels_; }
  [[nodiscard]] std::size_t size() const { return levels_.size(); }
  [[nodiscard]] int operator[](std::size_t i) const { return levels_[i]; }
  [[nodiscard]] int min() const { return levels_.front(); }
  [[nodiscard]] int max() const { return levels_.back(); }

  [[nodiscard]] bool contains(int v) const {
    return std::binary_search(levels_.begin(), levels_.end(), v);
  }

  /// Position of v in the level list; throws if v is not admissible.
  [[nodiscard]] std::size_t index_of(int v) const {
    auto it = std::lower_bound(levels_.begin(), levels_.end(), v);
    if (it == levels_.end() || *it != v)
      throw std::out_of_range("LevelSet: value " + std::to_string(v) + " not in W");
    return static_cast<std::size_t>(it - levels_.begin());
  }

  friend bool operator==(const LevelSet&, const LevelSet&) = default;

 private:
  std::vector<int> levels_;
};

/// Uniform partition of (0, T) into N cells.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, std::size_t n_cells) : horizon_(horizon), n_cells_(n_cells) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    if (n_cells == 0) throw std::invalid_argument("TimeGrid: need at least one cell");
    dt_ = horizon_ / static_cast<double>(n_cells_);
  }

  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] std::size_t size() const { return n_cells_; }
  [[nodiscard]] double dt() const { return dt_; }
  /// Left endpoint of cell i, or T for i == N.
  [[nodiscard]] double node(std::size_t i) const {
    return i == n_cells_ ? horizon_ : static_cast<double>(i) * dt_;
  }
  [[nodiscard]] double midpoint(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) * dt_;
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.n_cells_ == b.n_cells_ && a.horizon_ == b.horizon_;
  }

 private:
  double horizon_ = 1.0;
  std::size_t n_cells_ = 1;
  double dt_ = 1.0;
};

struct SwitchTime {
  double time;
  int left_value;
  int right_value;
  std::size_t interface;  // cell index i of the right neighbour; the jump sits at i*dt

  friend bool operator==(const SwitchTime&, const SwitchTime&) = default;
};

/// A feasible control: one value from W per time cell. Immutable.
class ControlGrid {
 public:
  ControlGrid(TimeGrid grid, LevelSet levels, std::vector<int> values)
      : grid_(grid), levels_(std::move(levels)), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw StructuralError("ControlGrid: expected " + std::to_string(grid_.size()) +
                            " values, got " + std::to_string(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!levels_.contains(values_[i]))
        throw std::invalid_argument("ControlGrid: value " + std::to_string(values_[i]) +
                                    " at cell " + std::to_string(i) + " is not in W");
    }
  }

  static ControlGrid constant(TimeGrid grid, LevelSet levels, int value) {
    std::vector<int> v(grid.size(), value);
    return {grid, std::move(levels), std::move(v)};
  }

  [[nodiscard]] const TimeGrid& grid() const { return grid_; }
  [[nodiscard]] const LevelSet& levels() const { return levels_; }
  [[nodiscard]] std::span<const int> values() const { return values_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] int operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] std::vector<double> as_real() const {
    return {values_.begin(), values_.end()};
  }

  /// w + d; throws if the result leaves W.
  [[nodiscard]] ControlGrid plus(std::span<const int> step) const {
    if (step.size() != values_.size()) throw StructuralError("ControlGrid::plus: length mismatch");
    std::vector<int> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i] + step[i];
    return {grid_, levels_, std::move(out)};
  }

  [[nodiscard]] bool is_constant() const {
    return std::adjacent_find(values_.begin(), values_.end(), std::not_equal_to<>()) ==
           values_.end();
  }

  friend bool operator==(const ControlGrid& a, const ControlGrid& b) {
    return a.grid_ == b.grid_ && a.levels_ == b.levels_ && a.values_ == b.values_;
  }

 private:
  TimeGrid grid_;
  LevelSet levels_;
  std::vector<int> values_;
};

/// Sum of absolute jump heights over interior interfaces (TV on the open interval).
inline std::int64_t jump_tv(std::span<const int> values) {
  std::int64_t tv = 0;
  for (std::size_t i = 1; i < values.size(); ++i) tv += std::abs(values[i] - values[i - 1]);
  return tv;
}

inline std::int64_t jump_tv(const ControlGrid& w) { return jump_tv(w.values()); }

inline std::vector<SwitchTime> switch_times(const ControlGrid& w) {
  std::vector<SwitchTime> out;
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (w[i] != w[i - 1]) out.push_back({w.grid().node(i), w[i - 1], w[i], i});
  }
  return out;
}

inline double l1_distance(const ControlGrid& a, const ControlGrid& b) {
  if (!(a.grid() == b.grid()) || !(a.levels() == b.levels()))
    throw StructuralError("l1_distance: controls live on different grids or level sets");
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return a.grid().dt() * static_cast<double>(s);
}

/// Step-plot CSV: header `t,w`, one row per cell left endpoint, then a terminal row at T.
inline void write_control_csv(std::ostream& os, const ControlGrid& w) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "t,w\n";
  for (std::size_t i = 0; i < w.size(); ++i) buf << w.grid().node(i) << ',' << w[i] << '\n';
  buf << w.grid().horizon() << ',' << w[w.size() - 1] << '\n';
  os << buf.str();
}

/// Inverse of write_control_csv. The grid and level set must be supplied by the caller.
inline ControlGrid read_control_csv(std::istream& is, const TimeGrid& grid, const LevelSet& levels) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,w", 0) != 0)
    throw std::runtime_error("read_control_csv: missing `t,w` header");
  std::vector<int> vals;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("read_control_csv: bad row: " + line);
    vals.push_back(std::stoi(line.substr(comma + 1)));
  }
  if (vals.size() != grid.size() + 1)
    throw StructuralError("read_control_csv: expected N+1 rows");
  vals.pop_back();
  return {grid, levels, std::move(vals)};
}

}  // namespace poroslip
