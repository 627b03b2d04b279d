#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dte/error.hpp"

namespace dte {

// A grid cell with 1-based coordinates. Cells order row-major: by y, then x.
struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend std::strong_ordering operator<=>(const Cell& a, const Cell& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

inline std::ostream& operator<<(std::ostream& os, const Cell& c) {
  return os << '(' << c.x << ',' << c.y << ')';
}

inline std::string to_string(const Cell& c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

inline int chebyshev(const Cell& a, const Cell& b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

// Rectangular environment with static obstacles and robot stations.
// Immutable once constructed; the constructor rejects inconsistent input.
class Grid {
 public:
  Grid(int width, int height, std::vector<Cell> obstacles = {}, std::vector<Cell> stations = {})
      : width_(width), height_(height), stations_(std::move(stations)) {
    if (width < 1 || height < 1) throw DomainError("grid dimensions must be positive");
    blocked_.assign(static_cast<std::size_t>(width) * height, 0);
    for (const Cell& c : obstacles) {
      if (!contains(c)) throw DomainError("obstacle " + to_string(c) + " is outside the grid");
      blocked_[index(c)] = 1;
    }
    for (const Cell& s : stations_) {
      if (!contains(s)) throw DomainError("station " + to_string(s) + " is outside the grid");
      if (blocked_[index(s)]) throw DomainError("station " + to_string(s) + " is an obstacle");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t cell_count() const noexcept { return blocked_.size(); }
  const std::vector<Cell>& stations() const noexcept { return stations_; }

  bool contains(const Cell& c) const noexcept {
    return c.x >= 1 && c.x <= width_ && c.y >= 1 && c.y <= height_;
  }
  bool is_feasible(const Cell& c) const noexcept { return contains(c) && !blocked_[index(c)]; }

  // Row-major linear index; consistent with Cell ordering.
  std::size_t index(const Cell& c) const noexcept {
    return static_cast<std::size_t>(c.y - 1) * width_ + static_cast<std::size_t>(c.x - 1);
  }
  Cell cell_at(std::size_t i) const noexcept {
    return Cell{static_cast<int>(i % width_) + 1, static_cast<int>(i / width_) + 1};
  }

  // Obstacles in ascending cell order.
  std::vector<Cell> obstacles() const {
    std::vector<Cell> out;
    for (std::size_t i = 0; i < blocked_.size(); ++i)
      if (blocked_[i]) out.push_back(cell_at(i));
    return out;
  }

  std::vector<Cell> feasible_cells() const {
    std::vector<Cell> out;
    for (std::size_t i = 0; i < blocked_.size(); ++i)
      if (!blocked_[i]) out.push_back(cell_at(i));
    return out;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.blocked_ == b.blocked_ &&
           a.stations_ == b.stations_;
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> blocked_;
  std::vector<Cell> stations_;
};

// An episode plan: positions p^0 .. p^T.
struct Trajectory {
  std::vector<Cell> positions;

  int horizon() const noexcept { return static_cast<int>(positions.size()) - 1; }
  const Cell& operator[](std::size_t t) const { return positions[t]; }
  bool stays_at(int t) const { return positions[t] == positions[t + 1]; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
  friend auto operator<=>(const Trajectory& a, const Trajectory& b) {
    return std::lexicographical_compare_three_way(a.positions.begin(), a.positions.end(),
                                                  b.positions.begin(), b.positions.end());
  }
};

inline std::ostream& operator<<(std::ostream& os, const Trajectory& p) {
  os << '{';
  for (std::size_t t = 0; t < p.positions.size(); ++t) os << (t ? ", " : "") << p.positions[t];
  return os << '}';
}

// Trajectory that never leaves the station.
inline Trajectory stay_at(const Cell& station, int horizon) {
  return Trajectory{std::vector<Cell>(static_cast<std::size_t>(horizon) + 1, station)};
}

// Feasible cells within Chebyshev distance one of p, p included, in ascending order.
inline std::vector<Cell> neighborhood(const Grid& grid, const Cell& p) {
  if (!grid.is_feasible(p)) throw DomainError("cell " + to_string(p) + " is not feasible");
  std::vector<Cell> out;
  out.reserve(9);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      Cell q{p.x + dx, p.y + dy};
      if (grid.is_feasible(q)) out.push_back(q);
    }
  return out;
}

enum class TrajectoryDefect {
  none,
  too_short,
  wrong_start,
  wrong_end,
  infeasible_cell,
  illegal_move,
};

struct TrajectoryCheck {
  TrajectoryDefect defect = TrajectoryDefect::none;
  int step = -1;  // offending time step, when meaningful

  explicit operator bool() const noexcept { return defect == TrajectoryDefect::none; }
};

inline TrajectoryCheck check_trajectory(const Grid& grid, const Cell& station, const Trajectory& traj) {
  const auto& p = traj.positions;
  if (p.size() < 2) return {TrajectoryDefect::too_short, -1};
  for (std::size_t t = 0; t < p.size(); ++t)
    if (!grid.is_feasible(p[t])) return {TrajectoryDefect::infeasible_cell, static_cast<int>(t)};
  if (p.front() != station) return {TrajectoryDefect::wrong_start, 0};
  if (p.back() != station) return {TrajectoryDefect::wrong_end, traj.horizon()};
  for (std::size_t t = 0; t + 1 < p.size(); ++t)
    if (chebyshev(p[t], p[t + 1]) > 1) return {TrajectoryDefect::illegal_move, static_cast<int>(t)};
  return {};
}

inline bool is_feasible_trajectory(const Grid& grid, const Cell& station, const Trajectory& traj) {
  return static_cast<bool>(check_trajectory(grid, station, traj));
}

// BFS distances over the king-move graph restricted to feasible cells.
class DistanceField {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  DistanceField(const Grid& grid, const Cell& source) : width_(grid.width()), height_(grid.height()) {
    if (!grid.is_feasible(source)) throw DomainError("cell " + to_string(source) + " is not feasible");
    dist_.assign(grid.cell_count(), kUnreachable);
    std::deque<Cell> queue{source};
    dist_[grid.index(source)] = 0;
    while (!queue.empty()) {
      Cell c = queue.front();
      queue.pop_front();
      const int d = dist_[grid.index(c)];
      for (const Cell& n : neighborhood(grid, c)) {
        int& dn = dist_[grid.index(n)];
        if (dn == kUnreachable) {
          dn = d + 1;
          queue.push_back(n);
        }
      }
    }
  }

  // kUnreachable for blocked or disconnected cells.
  int operator()(const Cell& c) const {
    if (c.x < 1 || c.x > width_ || c.y < 1 || c.y > height_) return kUnreachable;
    return dist_[static_cast<std::size_t>(c.y - 1) * width_ + static_cast<std::size_t>(c.x - 1)];
  }

 private:
  int width_;
  int height_;
  std::vector<int> dist_;
};

// Minimum number of king moves from a to b; std::nullopt when unreachable.
inline std::optional<int> shortest_distance(const Grid& grid, const Cell& a, const Cell& b) {
  if (!grid.is_feasible(b)) throw DomainError("cell " + to_string(b) + " is not feasible");
  const int d = DistanceField(grid, a)(b);
  if (d == DistanceField::kUnreachable) return std::nullopt;
  return d;
}

// |P_i|: number of feasible trajectories of length T returning to the station,
// by forward dynamic programming over (time, cell).
inline std::uint64_t count_feasible_trajectories(const Grid& grid, const Cell& station, int horizon) {
  if (!grid.is_feasible(station)) throw DomainError("station " + to_string(station) + " is not feasible");
  if (horizon < 1) throw DomainError("horizon must be at least 1");
  const auto cells = grid.feasible_cells();
  std::vector<std::vector<std::size_t>> moves(grid.cell_count());
  for (const Cell& c : cells)
    for (const Cell& n : neighborhood(grid, c)) moves[grid.index(c)].push_back(grid.index(n));

  std::vector<std::uint64_t> ways(grid.cell_count(), 0), next(grid.cell_count(), 0);
  ways[grid.index(station)] = 1;
  for (int t = 0; t < horizon; ++t) {
    std::fill(next.begin(), next.end(), 0);
    for (const Cell& c : cells) {
      const std::uint64_t w = ways[grid.index(c)];
      if (w == 0) continue;
      for (std::size_t n : moves[grid.index(c)])
        if (__builtin_add_overflow(next[n], w, &next[n]))
          throw std::overflow_error("trajectory count exceeds 64 bits");
    }
    ways.swap(next);
  }
  return ways[grid.index(station)];
}

// Visits every feasible trajectory in lexicographic order. The total count is
// checked against `budget` before the first visit, so the stream is never
// silently truncated.
inline void for_each_feasible_trajectory(const Grid& grid, const Cell& station, int horizon,
                                         std::uint64_t budget,
                                         const std::function<void(const Trajectory&)>& visit) {
  const std::uint64_t total = count_feasible_trajectories(grid, station, horizon);
  if (total > budget) throw BudgetExceeded("feasible trajectory enumeration", total, budget);

  const DistanceField home(grid, station);
  Trajectory traj{std::vector<Cell>(static_cast<std::size_t>(horizon) + 1, station)};
  std::function<void(int)> extend = [&](int t) {
    if (t == horizon) {
      visit(traj);
      return;
    }
    for (const Cell& n : neighborhood(grid, traj.positions[t])) {
      if (home(n) > horizon - (t + 1)) continue;
      traj.positions[t + 1] = n;
      extend(t + 1);
    }
  };
  extend(0);
}

inline std::vector<Trajectory> enumerate_feasible_trajectories(const Grid& grid, const Cell& station,
                                                               int horizon, std::uint64_t budget) {
  std::vector<Trajectory> out;
  for_each_feasible_trajectory(grid, station, horizon, budget,
                               [&](const Trajectory& p) { out.push_back(p); });
  return out;
}

}  // namespace dte

template <>
struct std::hash<dte::Cell> {
  std::size_t operator()(const dte::Cell& c) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
                                      static_cast<std::uint32_t>(c.y));
  }
};
