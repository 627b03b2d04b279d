#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dte/action_design.hpp"
#include "dte/error.hpp"
#include "dte/grid.hpp"
#include "dte/rng.hpp"
#include "dte/tasks.hpp"

namespace dte {

struct Robot {
  std::string id;
  std::size_t station = 0;  // index into Grid::stations()
  friend bool operator==(const Robot&, const Robot&) = default;
};

// plain: actions are trajectories. extended: actions also carry per-step
// service commitments; required when tasks share a location with
// overlapping windows.
enum class GameMode { plain, extended };

inline const char* to_string(GameMode m) { return m == GameMode::plain ? "plain" : "extended"; }

// A robot's increment to one task counter entry.
struct Contribution {
  std::uint32_t task = 0;
  std::uint32_t offset = 0;  // t - arrival
  friend bool operator==(const Contribution&, const Contribution&) = default;
};

struct Action {
  Trajectory trajectory;
  std::vector<int> commitments;  // length T, kNoTask where nothing is served
  std::vector<Contribution> contributions;  // sorted by (task, offset)
  std::size_t base = 0;  // trajectory index in the station's ActionSet
};

struct GameOptions {
  std::optional<GameMode> mode;  // default: plain unless windows overlap
  ActionDesignBudget budget;
  bool parallel_build = true;
};

// Actions shared by every robot assigned to one station.
struct StationActions {
  ActionSet trajectories;
  std::vector<Action> actions;
};

// The task-execution game: robots at stations, tasks, horizon and the per-robot
// action sets built for exactly these inputs. Immutable after construction.
class GameInstance {
 public:
  GameInstance(Grid grid, int horizon, std::vector<Robot> robots, std::vector<Task> tasks,
               const GameOptions& options = {})
      : grid_(std::move(grid)), horizon_(horizon), robots_(std::move(robots)), tasks_(std::move(tasks)) {
    validate_inputs(options.mode);
    std::vector<std::size_t> used;
    for (const Robot& r : robots_)
      if (std::find(used.begin(), used.end(), r.station) == used.end()) used.push_back(r.station);

    std::map<std::size_t, std::shared_ptr<const StationActions>> built;
    auto build = [this, &options](std::size_t s) {
      return make_station_actions(
          build_minimal_action_set(grid_, grid_.stations()[s], horizon_, tasks_, options.budget), options.budget);
    };
    if (options.parallel_build && used.size() > 1) {
      std::vector<std::future<StationActions>> jobs;
      for (std::size_t s : used) jobs.push_back(std::async(std::launch::async, build, s));
      for (std::size_t k = 0; k < used.size(); ++k)
        built[used[k]] = std::make_shared<const StationActions>(jobs[k].get());
    } else {
      for (std::size_t s : used) built[s] = std::make_shared<const StationActions>(build(s));
    }
    for (const Robot& r : robots_) per_robot_.push_back(built.at(r.station));
  }

  // Game whose action sets are given explicitly, one trajectory list per robot
  // (used by brute-force oracles over the full trajectory space).
  static GameInstance with_trajectories(Grid grid, int horizon, std::vector<Robot> robots, std::vector<Task> tasks,
                                        const std::vector<std::vector<Trajectory>>& per_robot,
                                        const GameOptions& options = {}) {
    GameInstance g(std::move(grid), horizon, std::move(robots), std::move(tasks), Uninitialized{});
    g.validate_inputs(options.mode);
    if (per_robot.size() != g.robots_.size()) throw DomainError("one trajectory list per robot is required");
    for (std::size_t i = 0; i < g.robots_.size(); ++i) {
      const Cell station = g.station_of(i);
      ActionSet set{station, horizon, per_robot[i], {}};
      if (set.actions.empty()) throw DomainError("robot " + g.robots_[i].id + " has an empty action set");
      for (const auto& p : set.actions) {
        if (p.horizon() != horizon || !is_feasible_trajectory(g.grid_, station, p))
          throw DomainError("infeasible trajectory for robot " + g.robots_[i].id);
        set.signatures.push_back(signature(p, g.tasks_));
      }
      g.per_robot_.push_back(std::make_shared<const StationActions>(g.make_station_actions(std::move(set), options.budget)));
    }
    return g;
  }

  const Grid& grid() const noexcept { return grid_; }
  int horizon() const noexcept { return horizon_; }
  GameMode mode() const noexcept { return mode_; }
  const std::vector<Robot>& robots() const noexcept { return robots_; }
  const std::vector<Task>& tasks() const noexcept { return tasks_; }
  std::size_t robot_count() const noexcept { return robots_.size(); }
  std::size_t task_count() const noexcept { return tasks_.size(); }

  Cell station_of(std::size_t robot) const { return grid_.stations().at(robots_.at(robot).station); }
  const std::vector<Action>& actions(std::size_t robot) const { return per_robot_.at(robot)->actions; }
  const ActionSet& action_set(std::size_t robot) const { return per_robot_.at(robot)->trajectories; }

  std::size_t robot_index(const std::string& id) const {
    for (std::size_t i = 0; i < robots_.size(); ++i)
      if (robots_[i].id == id) return i;
    throw DomainError("unknown robot " + id);
  }

 private:
  struct Uninitialized {};
  GameInstance(Grid grid, int horizon, std::vector<Robot> robots, std::vector<Task> tasks, Uninitialized)
      : grid_(std::move(grid)), horizon_(horizon), robots_(std::move(robots)), tasks_(std::move(tasks)) {}

  void validate_inputs(std::optional<GameMode> requested) {
    if (horizon_ < 1) throw DomainError("horizon must be at least 1");
    for (const Robot& r : robots_)
      if (r.station >= grid_.stations().size())
        throw DomainError("robot " + r.id + " refers to unknown station " + std::to_string(r.station));
    for (const Task& t : tasks_) validate_task(t, grid_, horizon_);
    const bool overlap = !check_no_overlap(tasks_).empty();
    mode_ = requested.value_or(overlap ? GameMode::extended : GameMode::plain);
    if (mode_ == GameMode::plain && overlap)
      throw DomainError("plain mode requires tasks at a shared location to have disjoint windows");
  }

  StationActions make_station_actions(ActionSet set, const ActionDesignBudget& budget) const {
    StationActions out{std::move(set), {}};
    if (mode_ == GameMode::extended) {
      for (auto& ext : extend_action_set(out.trajectories, tasks_, budget))
        out.actions.push_back(make_action(std::move(ext.trajectory), std::move(ext.commitments), ext.base));
    } else {
      for (std::size_t a = 0; a < out.trajectories.actions.size(); ++a) {
        const Trajectory& p = out.trajectories.actions[a];
        out.actions.push_back(make_action(p, canonical_commitments(p, tasks_), a));
      }
    }
    return out;
  }

  Action make_action(Trajectory traj, std::vector<int> z, std::size_t base) const {
    Action act{std::move(traj), std::move(z), {}, base};
    for (int t = 0; t < horizon_; ++t)
      if (act.commitments[t] != kNoTask) {
        const Task& task = tasks_[act.commitments[t]];
        act.contributions.push_back(
            {static_cast<std::uint32_t>(act.commitments[t]), static_cast<std::uint32_t>(t - task.arrival)});
      }
    std::sort(act.contributions.begin(), act.contributions.end(),
              [](const Contribution& a, const Contribution& b) {
                return a.task != b.task ? a.task < b.task : a.offset < b.offset;
              });
    return act;
  }

  Grid grid_;
  int horizon_;
  std::vector<Robot> robots_;
  std::vector<Task> tasks_;
  GameMode mode_ = GameMode::plain;
  std::vector<std::shared_ptr<const StationActions>> per_robot_;
};

// Index of the chosen action for each robot.
struct JointPlan {
  std::vector<std::size_t> choice;

  std::size_t size() const noexcept { return choice.size(); }
  std::size_t operator[](std::size_t i) const { return choice[i]; }
  std::size_t& operator[](std::size_t i) { return choice[i]; }

  friend bool operator==(const JointPlan&, const JointPlan&) = default;
  friend auto operator<=>(const JointPlan&, const JointPlan&) = default;
};

inline void validate_plan(const GameInstance& game, const JointPlan& plan) {
  if (plan.size() != game.robot_count()) throw DomainError("plan size does not match robot count");
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (plan[i] >= game.actions(i).size())
      throw DomainError("action " + std::to_string(plan[i]) + " out of range for robot " + game.robots()[i].id);
}

namespace detail {

inline void require_task(const GameInstance& game, std::size_t task) {
  if (task >= game.task_count()) throw DomainError("unknown task index " + std::to_string(task));
}

inline void require_robot(const GameInstance& game, std::size_t robot) {
  if (robot >= game.robot_count()) throw DomainError("unknown robot index " + std::to_string(robot));
}

inline void add_contributions(const Action& a, std::size_t task, CounterVector& c) {
  for (const Contribution& k : a.contributions)
    if (k.task == task) ++c[k.offset];
}

}  // namespace detail

// Counter vector of one task, optionally leaving one robot out.
inline CounterVector counters(const GameInstance& game, const JointPlan& plan, std::size_t task,
                              std::optional<std::size_t> without = std::nullopt) {
  detail::require_task(game, task);
  validate_plan(game, plan);
  CounterVector c(static_cast<std::size_t>(game.tasks()[task].window_length()), 0);
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (!without || *without != i) detail::add_contributions(game.actions(i)[plan[i]], task, c);
  return c;
}

// Total value from tasks; the potential of the game.
inline Value global_value(const GameInstance& game, const JointPlan& plan) {
  Value f = 0;
  for (std::size_t j = 0; j < game.task_count(); ++j)
    f += evaluate_value(game.tasks()[j], counters(game, plan, j));
  return f;
}

// Marginal contribution of one robot to the total value.
inline Value utility(const GameInstance& game, const JointPlan& plan, std::size_t robot) {
  detail::require_robot(game, robot);
  Value u = 0;
  for (std::size_t j = 0; j < game.task_count(); ++j)
    u += evaluate_value(game.tasks()[j], counters(game, plan, j)) -
         evaluate_value(game.tasks()[j], counters(game, plan, j, robot));
  return u;
}

// Total value of raw trajectories, counting every stay at an active task
// location (no action sets or commitments involved).
inline Value total_value(std::span<const Task> tasks, std::span<const Trajectory> trajectories) {
  Value f = 0;
  for (const Task& task : tasks) {
    CounterVector c(static_cast<std::size_t>(task.window_length()), 0);
    for (const Trajectory& p : trajectories)
      for (int t = task.arrival; t < task.departure && t < p.horizon(); ++t)
        if (p[t] == task.location && p.stays_at(t)) ++c[t - task.arrival];
    f += evaluate_value(task, c);
  }
  return f;
}

// Tasks the robot can reach, serve for a step and return from: 2·dist < T.
inline std::vector<std::size_t> local_tasks(const GameInstance& game, std::size_t robot) {
  detail::require_robot(game, robot);
  const DistanceField from_station(game.grid(), game.station_of(robot));
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < game.task_count(); ++j) {
    const int d = from_station(game.tasks()[j].location);
    if (d != DistanceField::kUnreachable && 2 * static_cast<long long>(d) < game.horizon()) out.push_back(j);
  }
  return out;
}

// Robots sharing at least one reachable task with `robot` (itself included
// when it has any).
inline std::vector<std::size_t> local_robots(const GameInstance& game, std::size_t robot) {
  const auto mine = local_tasks(game, robot);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < game.robot_count(); ++k) {
    const auto theirs = local_tasks(game, k);
    const bool shared = std::any_of(mine.begin(), mine.end(), [&](std::size_t j) {
      return std::find(theirs.begin(), theirs.end(), j) != theirs.end();
    });
    if (shared) out.push_back(k);
  }
  return out;
}

// Utility computed from local information only: reachable tasks and the
// actions of robots sharing one of them.
inline Value local_utility(const GameInstance& game, const JointPlan& plan, std::size_t robot) {
  validate_plan(game, plan);
  const auto tasks = local_tasks(game, robot);
  const auto peers = local_robots(game, robot);
  Value u = 0;
  for (std::size_t j : tasks) {
    CounterVector with(static_cast<std::size_t>(game.tasks()[j].window_length()), 0);
    CounterVector without = with;
    for (std::size_t k : peers) {
      detail::add_contributions(game.actions(k)[plan[k]], j, with);
      if (k != robot) detail::add_contributions(game.actions(k)[plan[k]], j, without);
    }
    u += evaluate_value(game.tasks()[j], with) - evaluate_value(game.tasks()[j], without);
  }
  return u;
}

inline JointPlan random_plan(const GameInstance& game, RandomStream& rng) {
  JointPlan plan{std::vector<std::size_t>(game.robot_count())};
  for (std::size_t i = 0; i < plan.size(); ++i) plan[i] = rng.uniform_index(game.actions(i).size());
  return plan;
}

using UtilityFunction = std::function<Value(const GameInstance&, const JointPlan&, std::size_t)>;

// Samples random (plan, robot, alternative action) triples and checks
// U_i(a', p_-i) - U_i(a, p_-i) == f(a', p_-i) - f(a, p_-i) exactly.
inline bool verify_potential_identity(const GameInstance& game, std::size_t samples, std::uint64_t seed,
                                      const UtilityFunction& utility_fn = utility) {
  if (game.robot_count() == 0) return true;
  RandomStream rng(seed, StreamId::sampling);
  for (std::size_t s = 0; s < samples; ++s) {
    JointPlan plan = random_plan(game, rng);
    const std::size_t i = rng.uniform_index(game.robot_count());
    JointPlan alt = plan;
    alt[i] = rng.uniform_index(game.actions(i).size());
    const Value du = utility_fn(game, alt, i) - utility_fn(game, plan, i);
    const Value df = global_value(game, alt) - global_value(game, plan);
    if (du != df) return false;
  }
  return true;
}

// Joint plan with cached counters and per-task values, updated incrementally
// as single robots switch actions. Utilities of every candidate action of one
// robot are computed against the counters with that robot removed, touching
// only the tasks the candidate contributes to.
class PlanState {
 public:
  PlanState(const GameInstance& game, JointPlan plan) : game_(&game), plan_(std::move(plan)) {
    validate_plan(game, plan_);
    counters_.resize(game.task_count());
    values_.resize(game.task_count());
    for (std::size_t j = 0; j < game.task_count(); ++j)
      counters_[j].assign(static_cast<std::size_t>(game.tasks()[j].window_length()), 0);
    for (std::size_t i = 0; i < plan_.size(); ++i) apply(action(i), +1);
    for (std::size_t j = 0; j < game.task_count(); ++j) refresh(j);
  }

  const JointPlan& plan() const noexcept { return plan_; }
  Value value() const noexcept { return total_; }
  const CounterVector& counter(std::size_t task) const { return counters_.at(task); }
  Value task_value(std::size_t task) const { return values_.at(task); }

  void set_action(std::size_t robot, std::size_t a) {
    if (a >= game_->actions(robot).size()) throw DomainError("action index out of range");
    if (plan_[robot] == a) return;
    const Action& old = action(robot);
    plan_[robot] = a;
    const Action& now = action(robot);
    apply(old, -1);
    apply(now, +1);
    for_each_task(old, [&](std::size_t j) { refresh(j); });
    for_each_task(now, [&](std::size_t j) { refresh(j); });
  }

  // U_i(a, p_-i) for every action a of `robot`, in action order.
  std::vector<Value> candidate_utilities(std::size_t robot) {
    const auto& acts = game_->actions(robot);
    std::vector<Value> out(acts.size(), 0);
    const Action& current = action(robot);
    apply(current, -1);
    // values without the robot on the tasks it currently touches
    std::vector<std::pair<std::size_t, Value>> saved;
    for_each_task(current, [&](std::size_t j) {
      saved.emplace_back(j, values_[j]);
      values_[j] = evaluate_value(game_->tasks()[j].value, counters_[j]);
    });
    for (std::size_t a = 0; a < acts.size(); ++a) {
      const auto& contrib = acts[a].contributions;
      Value u = 0;
      for (std::size_t k = 0; k < contrib.size();) {
        const std::size_t j = contrib[k].task;
        std::size_t end = k;
        while (end < contrib.size() && contrib[end].task == j) ++counters_[j][contrib[end++].offset];
        u += evaluate_value(game_->tasks()[j].value, counters_[j]) - values_[j];
        for (std::size_t q = k; q < end; ++q) --counters_[j][contrib[q].offset];
        k = end;
      }
      out[a] = u;
    }
    apply(current, +1);
    for (const auto& [j, v] : saved) values_[j] = v;
    return out;
  }

  Value utility(std::size_t robot) {
    const Action& current = action(robot);
    Value u = 0;
    apply(current, -1);
    for_each_task(current, [&](std::size_t j) {
      u += values_[j] - evaluate_value(game_->tasks()[j].value, counters_[j]);
    });
    apply(current, +1);
    return u;
  }

 private:
  const Action& action(std::size_t robot) const { return game_->actions(robot)[plan_[robot]]; }

  void apply(const Action& a, int sign) {
    for (const Contribution& k : a.contributions) counters_[k.task][k.offset] += sign;
  }

  template <typename F>
  static void for_each_task(const Action& a, F&& f) {
    for (std::size_t k = 0; k < a.contributions.size(); ++k)
      if (k == 0 || a.contributions[k].task != a.contributions[k - 1].task) f(a.contributions[k].task);
  }

  void refresh(std::size_t j) {
    const Value v = evaluate_value(game_->tasks()[j].value, counters_[j]);
    total_ += v - values_[j];
    values_[j] = v;
  }

  const GameInstance* game_;
  JointPlan plan_;
  std::vector<CounterVector> counters_;
  std::vector<Value> values_;
  Value total_ = 0;
};

}  // namespace dte
