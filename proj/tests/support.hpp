#pragma once

#include <string>
#include <vector>

#include "dte/dte.hpp"

namespace dte::testing {

inline std::string fixture(const std::string& name) { return std::string(DTE_SCENARIO_DIR) + "/" + name; }

inline const Cell kS1{2, 2};
inline const Cell kS2{6, 3};
inline const Cell kS3{4, 5};

inline Grid layout_grid() {
  return Grid(7, 5, {{1, 5}, {2, 4}, {2, 5}, {4, 2}, {4, 3}, {4, 4}, {5, 3}, {5, 4}, {6, 1}, {7, 1}}, {kS1, kS2, kS3});
}

inline Trajectory traj(std::vector<Cell> cells) { return Trajectory{std::move(cells)}; }

inline Task make_task(std::string id, Cell at, int a, int d, ValueSpec v) { return Task{std::move(id), at, a, d, v}; }

// Random small instance: grid up to max_w x max_h with sparse obstacles, one
// station per robot, tasks on feasible cells with threshold values.
struct RandomInstance {
  Grid grid;
  int horizon;
  std::vector<Robot> robots;
  std::vector<Task> tasks;
};

inline RandomInstance random_instance(RandomStream& rng, int max_w, int max_h, int max_robots, int max_t,
                                      int max_tasks, bool single_station = false, bool simple_only = false) {
  while (true) {
    const int w = 2 + static_cast<int>(rng.uniform_index(max_w - 1));
    const int h = 2 + static_cast<int>(rng.uniform_index(max_h - 1));
    std::vector<Cell> obstacles;
    for (int y = 1; y <= h; ++y)
      for (int x = 1; x <= w; ++x)
        if (rng.uniform01() < 0.15) obstacles.push_back({x, y});
    Grid probe(w, h, obstacles);
    auto cells = probe.feasible_cells();
    if (cells.size() < 2) continue;
    const int n = 1 + static_cast<int>(rng.uniform_index(max_robots));
    std::vector<Cell> stations;
    std::vector<Robot> robots;
    const Cell first = cells[rng.uniform_index(cells.size())];
    for (int i = 0; i < n; ++i) {
      Cell s = single_station ? first : cells[rng.uniform_index(cells.size())];
      auto it = std::find(stations.begin(), stations.end(), s);
      if (it == stations.end()) {
        stations.push_back(s);
        it = stations.end() - 1;
      }
      robots.push_back({"r" + std::to_string(i + 1), static_cast<std::size_t>(it - stations.begin())});
    }
    Grid grid(w, h, obstacles, stations);
    const int horizon = 2 + static_cast<int>(rng.uniform_index(max_t - 1));
    const int m = 1 + static_cast<int>(rng.uniform_index(max_tasks));
    std::vector<Task> tasks;
    for (int j = 0; j < m; ++j) {
      const Cell at = cells[rng.uniform_index(cells.size())];
      const int a = static_cast<int>(rng.uniform_index(horizon));
      const int d = a + 1 + static_cast<int>(rng.uniform_index(horizon - a));
      const Value v = 1 + static_cast<Value>(rng.uniform_index(9));
      ValueSpec spec;
      if (simple_only) {
        spec = rng.uniform_index(2) ? ValueSpec(SimpleValue{v}) : ValueSpec(ThresholdMax{v, 1});
      } else {
        const int c = 1 + static_cast<int>(rng.uniform_index(3));
        spec = rng.uniform_index(2) ? ValueSpec(ThresholdMax{v, c}) : ValueSpec(ThresholdSum{v, c});
      }
      Task t{std::to_string(j + 1), at, a, d, spec};
      // keep windows disjoint per location so the game stays in plain mode
      bool clash = false;
      for (const Task& o : tasks)
        if (o.location == at && std::min(o.departure, d) > std::max(o.arrival, a)) clash = true;
      if (!clash) tasks.push_back(t);
    }
    return {grid, horizon, robots, tasks};
  }
}

}  // namespace dte::testing

namespace dte::testing {

// Independent oracle for the minimal action set: enumerate every feasible
// trajectory, keep the distinct maximal non-empty signatures.
inline std::vector<ServiceSignature> maximal_signatures_by_enumeration(const Grid& grid, const Cell& station,
                                                                       int horizon, std::span<const Task> tasks) {
  std::vector<ServiceSignature> all;
  for_each_feasible_trajectory(grid, station, horizon, 50'000'000, [&](const Trajectory& p) {
    auto s = signature(p, tasks);
    if (!s.empty() && std::find(all.begin(), all.end(), s) == all.end()) all.push_back(std::move(s));
  });
  std::vector<ServiceSignature> out;
  for (const auto& s : all) {
    const bool dominated = std::any_of(all.begin(), all.end(), [&](const auto& o) {
      return !(o == s) && s.is_subset_of(o);
    });
    if (!dominated) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.stays < b.stays; });
  return out;
}

// Exhaustive max f over the full trajectory space and over the designed
// action sets; nullopt when the full space exceeds `profile_cap`.
struct OptimumPair {
  Value full = 0;
  Value designed = 0;
};

inline std::optional<OptimumPair> designed_optimum_pair(const RandomInstance& inst, std::uint64_t profile_cap) {
  std::uint64_t product = 1;
  for (const Robot& r : inst.robots) {
    const auto n = count_feasible_trajectories(inst.grid, inst.grid.stations()[r.station], inst.horizon);
    if (__builtin_mul_overflow(product, n, &product) || product > profile_cap) return std::nullopt;
  }
  const GameInstance game(inst.grid, inst.horizon, inst.robots, inst.tasks);
  return OptimumPair{brute_force_optimum_full(game, profile_cap, profile_cap), brute_force_optimum(game).value};
}

}  // namespace dte::testing
