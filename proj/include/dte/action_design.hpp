#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "dte/error.hpp"
#include "dte/grid.hpp"
#include "dte/tasks.hpp"

namespace dte {

// One task-serving stay: the robot is at `cell` at times t and t+1 while a
// task located there is active at t.
struct Stay {
  int t = 0;
  Cell cell;
  friend bool operator==(const Stay&, const Stay&) = default;
  friend auto operator<=>(const Stay&, const Stay&) = default;
};

// All task-serving stays of a trajectory, ordered by time (one per step at most).
struct ServiceSignature {
  std::vector<Stay> stays;

  bool empty() const noexcept { return stays.empty(); }
  std::size_t size() const noexcept { return stays.size(); }

  bool is_subset_of(const ServiceSignature& other) const {
    return std::includes(other.stays.begin(), other.stays.end(), stays.begin(), stays.end());
  }

  friend bool operator==(const ServiceSignature&, const ServiceSignature&) = default;
};

// Tasks that a robot following `traj` can serve at step t.
inline std::vector<std::size_t> theta(const Trajectory& traj, std::span<const Task> tasks, int t) {
  if (t < 0 || t >= traj.horizon()) throw DomainError("time step outside [0, T)");
  std::vector<std::size_t> out;
  if (!traj.stays_at(t)) return out;
  for (std::size_t j = 0; j < tasks.size(); ++j)
    if (tasks[j].location == traj[t] && tasks[j].active_at(t)) out.push_back(j);
  return out;
}

// Times at which the trajectory stays at an active task location.
inline std::vector<int> service_times(const Trajectory& traj, std::span<const Task> tasks) {
  std::vector<int> out;
  for (int t = 0; t < traj.horizon(); ++t)
    if (!theta(traj, tasks, t).empty()) out.push_back(t);
  return out;
}

inline ServiceSignature signature(const Trajectory& traj, std::span<const Task> tasks) {
  ServiceSignature sig;
  for (int t : service_times(traj, tasks)) sig.stays.push_back({t, traj[t]});
  return sig;
}

struct ActionSet {
  Cell station;
  int horizon = 0;
  std::vector<Trajectory> actions;
  std::vector<ServiceSignature> signatures;  // parallel to actions

  std::size_t size() const noexcept { return actions.size(); }
};

struct ActionDesignBudget {
  std::uint64_t max_search_states = 1'000'000;  // distinct (cell, signature) states per step
  std::uint64_t max_extended_actions = 100'000;  // per robot
};

namespace detail {

// Dense numbering of the (t, cell) pairs at which a stay would serve a task.
class SlotTable {
 public:
  SlotTable(const Grid& grid, int horizon, std::span<const Task> tasks)
      : cells_(grid.cell_count()), slot_(static_cast<std::size_t>(horizon) * cells_, -1) {
    for (int t = 0; t < horizon; ++t)
      for (const Task& task : tasks)
        if (task.active_at(t) && grid.is_feasible(task.location)) {
          int& s = slot_[static_cast<std::size_t>(t) * cells_ + grid.index(task.location)];
          if (s < 0) {
            s = static_cast<int>(time_.size());
            time_.push_back(t);
            cell_.push_back(grid.index(task.location));
          }
        }
  }

  int slot(int t, std::size_t cell) const { return slot_[static_cast<std::size_t>(t) * cells_ + cell]; }
  std::size_t count() const noexcept { return time_.size(); }
  std::size_t words() const noexcept { return (time_.size() + 63) / 64; }
  int time_of(std::size_t s) const { return time_[s]; }
  std::size_t cell_of(std::size_t s) const { return cell_[s]; }

 private:
  std::size_t cells_;
  std::vector<int> slot_;
  std::vector<int> time_;
  std::vector<std::size_t> cell_;
};

// Search state: word 0 is the cell index, the rest is the slot bitset.
using PackedState = std::vector<std::uint64_t>;

struct PackedStateHash {
  std::size_t operator()(const PackedState& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t w : s) {
      h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

inline int popcount(std::span<const std::uint64_t> bits) {
  int n = 0;
  for (std::uint64_t w : bits) n += std::popcount(w);
  return n;
}

inline bool is_subset(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] & ~b[i]) return false;
  return true;
}

// Lexicographically smallest trajectory whose service stays are exactly the
// slots in `bits`.
inline Trajectory realize_signature(const Grid& grid, const Cell& station, int horizon, const SlotTable& slots,
                                    std::span<const std::uint64_t> bits) {
  const std::size_t n_cells = grid.cell_count();
  std::vector<int> required(static_cast<std::size_t>(horizon), -1);
  for (std::size_t s = 0; s < slots.count(); ++s)
    if (bits[s / 64] >> (s % 64) & 1U) required[slots.time_of(s)] = static_cast<int>(slots.cell_of(s));

  std::vector<std::vector<std::size_t>> moves(n_cells);
  for (const Cell& c : grid.feasible_cells())
    for (const Cell& n : neighborhood(grid, c)) moves[grid.index(c)].push_back(grid.index(n));

  auto allowed = [&](int t, std::size_t from, std::size_t to) {
    if (required[t] >= 0) return static_cast<int>(from) == required[t] && from == to;
    return !(from == to && slots.slot(t, from) >= 0);
  };

  // completes[t][c]: from cell c at time t the station is reachable at T
  // without gaining or missing a required stay.
  std::vector<std::vector<char>> completes(static_cast<std::size_t>(horizon) + 1,
                                           std::vector<char>(n_cells, 0));
  completes[horizon][grid.index(station)] = 1;
  for (int t = horizon - 1; t >= 0; --t)
    for (std::size_t c = 0; c < n_cells; ++c)
      for (std::size_t r : moves[c])
        if (completes[t + 1][r] && allowed(t, c, r)) {
          completes[t][c] = 1;
          break;
        }

  if (!completes[0][grid.index(station)]) throw std::logic_error("signature is not realizable");
  Trajectory traj{{station}};
  std::size_t here = grid.index(station);
  for (int t = 0; t < horizon; ++t) {
    for (std::size_t r : moves[here])
      if (completes[t + 1][r] && allowed(t, here, r)) {
        here = r;
        break;
      }
    traj.positions.push_back(grid.cell_at(here));
  }
  return traj;
}

}  // namespace detail

// Minimal action set: one representative trajectory per maximal achievable
// service signature (under set inclusion). Every feasible trajectory's
// signature is contained in some representative's signature, and no smaller
// set has that property.
//
// Achievable signatures come from a forward search over (time, cell,
// signature-so-far) states; a state is dropped when its cell cannot reach the
// station in the remaining steps. If no trajectory serves any task the result
// is the single stay-at-station trajectory.
inline ActionSet build_minimal_action_set(const Grid& grid, const Cell& station, int horizon,
                                          std::span<const Task> tasks, const ActionDesignBudget& budget = {}) {
  if (!grid.is_feasible(station)) throw DomainError("station " + to_string(station) + " is not feasible");
  if (horizon < 1) throw DomainError("horizon must be at least 1");

  const detail::SlotTable slots(grid, horizon, tasks);
  const DistanceField home(grid, station);
  const std::size_t words = slots.words();

  std::vector<std::vector<std::size_t>> moves(grid.cell_count());
  for (const Cell& c : grid.feasible_cells())
    for (const Cell& n : neighborhood(grid, c))
      moves[grid.index(c)].push_back(grid.index(n));

  using StateSet = std::unordered_set<detail::PackedState, detail::PackedStateHash>;
  StateSet frontier;
  {
    detail::PackedState start(words + 1, 0);
    start[0] = grid.index(station);
    frontier.insert(std::move(start));
  }
  for (int t = 0; t < horizon; ++t) {
    StateSet next;
    for (const auto& state : frontier) {
      const std::size_t c = state[0];
      for (std::size_t r : moves[c]) {
        if (home(grid.cell_at(r)) > horizon - (t + 1)) continue;
        detail::PackedState succ = state;
        succ[0] = r;
        if (r == c) {
          const int s = slots.slot(t, c);
          if (s >= 0) succ[1 + s / 64] |= std::uint64_t{1} << (s % 64);
        }
        next.insert(std::move(succ));
      }
      if (next.size() > budget.max_search_states)
        throw BudgetExceeded("achievable signature search at " + to_string(station), next.size(),
                             budget.max_search_states);
    }
    frontier.swap(next);
  }

  // Signatures of complete trajectories (all frontier states sit at the station).
  std::vector<std::vector<std::uint64_t>> sigs;
  for (const auto& state : frontier) {
    std::vector<std::uint64_t> bits(state.begin() + 1, state.end());
    if (detail::popcount(bits) > 0) sigs.push_back(std::move(bits));
  }

  ActionSet out{station, horizon, {}, {}};
  if (sigs.empty()) {
    out.actions.push_back(stay_at(station, horizon));
    out.signatures.push_back(signature(out.actions.back(), tasks));
    return out;
  }

  std::sort(sigs.begin(), sigs.end(), [](const auto& a, const auto& b) {
    const int pa = detail::popcount(a), pb = detail::popcount(b);
    return pa != pb ? pa > pb : a < b;
  });
  std::vector<const std::vector<std::uint64_t>*> maximal;
  for (const auto& s : sigs) {
    const bool dominated = std::any_of(maximal.begin(), maximal.end(),
                                       [&](const auto* m) { return detail::is_subset(s, *m); });
    if (!dominated) maximal.push_back(&s);
  }

  for (const auto* m : maximal) out.actions.push_back(detail::realize_signature(grid, station, horizon, slots, *m));
  std::sort(out.actions.begin(), out.actions.end());
  for (const auto& a : out.actions) out.signatures.push_back(signature(a, tasks));
  return out;
}

// Brute-force check of the covering constraint: every feasible trajectory's
// service signature is contained in the signature of some action.
inline bool verify_cover(const ActionSet& action_set, const Grid& grid, const Cell& station, int horizon,
                         std::span<const Task> tasks, std::uint64_t budget = 10'000'000) {
  if (action_set.actions.empty()) return false;
  std::vector<ServiceSignature> held;
  for (const auto& a : action_set.actions) {
    if (a.horizon() != horizon || !is_feasible_trajectory(grid, station, a)) return false;
    held.push_back(signature(a, tasks));
  }
  bool covered = true;
  for_each_feasible_trajectory(grid, station, horizon, budget, [&](const Trajectory& q) {
    if (!covered) return;
    const ServiceSignature s = signature(q, tasks);
    if (s.empty()) return;
    covered = std::any_of(held.begin(), held.end(), [&](const auto& h) { return s.is_subset_of(h); });
  });
  return covered;
}

inline constexpr int kNoTask = -1;

// A trajectory plus, for each step t < T, the task the robot commits to
// serving (kNoTask when theta is empty).
struct ExtendedAction {
  Trajectory trajectory;
  std::vector<int> commitments;
  std::size_t base = 0;  // index of the trajectory in the originating ActionSet

  friend bool operator==(const ExtendedAction&, const ExtendedAction&) = default;
};

// Commitment sequence that picks the lowest-index servable task at each step.
// Under non-overlapping windows it is the only admissible one.
inline std::vector<int> canonical_commitments(const Trajectory& traj, std::span<const Task> tasks) {
  std::vector<int> z(static_cast<std::size_t>(traj.horizon()), kNoTask);
  for (int t = 0; t < traj.horizon(); ++t) {
    const auto served = theta(traj, tasks, t);
    if (!served.empty()) z[t] = static_cast<int>(served.front());
  }
  return z;
}

// Expands each trajectory into every admissible commitment sequence, in
// odometer order (earliest step varies slowest, task indices ascending).
inline std::vector<ExtendedAction> extend_action_set(const ActionSet& action_set, std::span<const Task> tasks,
                                                     const ActionDesignBudget& budget = {}) {
  std::vector<ExtendedAction> out;
  for (std::size_t a = 0; a < action_set.actions.size(); ++a) {
    const Trajectory& traj = action_set.actions[a];
    const int horizon = traj.horizon();
    std::vector<std::vector<int>> choices(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
      for (std::size_t j : theta(traj, tasks, t)) choices[t].push_back(static_cast<int>(j));
      if (choices[t].empty()) choices[t].push_back(kNoTask);
    }
    std::vector<std::size_t> digit(static_cast<std::size_t>(horizon), 0);
    while (true) {
      ExtendedAction ext{traj, std::vector<int>(static_cast<std::size_t>(horizon)), a};
      for (int t = 0; t < horizon; ++t) ext.commitments[t] = choices[t][digit[t]];
      out.push_back(std::move(ext));
      if (out.size() > budget.max_extended_actions)
        throw BudgetExceeded("extended action expansion", out.size(), budget.max_extended_actions);
      int t = horizon - 1;
      for (; t >= 0; --t) {
        if (++digit[t] < choices[t].size()) break;
        digit[t] = 0;
      }
      if (t < 0) break;
    }
  }
  return out;
}

}  // namespace dte
