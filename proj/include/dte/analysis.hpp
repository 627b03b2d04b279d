#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dte/error.hpp"
#include "dte/game.hpp"
#include "dte/learning.hpp"

namespace dte {

// Mixed-radix indexing of the joint action space; robot 0 is the most
// significant digit, so profile order equals lexicographic JointPlan order.
class ProfileSpace {
 public:
  ProfileSpace(const GameInstance& game, std::uint64_t budget) {
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < game.robot_count(); ++i) {
      const std::uint64_t n = game.actions(i).size();
      radix_.push_back(n);
      if (__builtin_mul_overflow(total, n, &total)) total = std::numeric_limits<std::uint64_t>::max();
    }
    if (total > budget) throw BudgetExceeded("joint action space", total, budget);
    size_ = total;
  }

  std::uint64_t size() const noexcept { return size_; }

  JointPlan decode(std::uint64_t index) const {
    JointPlan plan{std::vector<std::size_t>(radix_.size())};
    for (std::size_t i = radix_.size(); i-- > 0;) {
      plan[i] = index % radix_[i];
      index /= radix_[i];
    }
    return plan;
  }

  std::uint64_t encode(const JointPlan& plan) const {
    std::uint64_t index = 0;
    for (std::size_t i = 0; i < radix_.size(); ++i) index = index * radix_[i] + plan[i];
    return index;
  }

 private:
  std::vector<std::uint64_t> radix_;
  std::uint64_t size_ = 1;
};

namespace detail {

// Visits every joint plan in profile order with an incrementally updated
// PlanState; the visitor receives (index, state).
template <typename Visit>
void for_each_profile(const GameInstance& game, std::uint64_t budget, Visit&& visit) {
  const ProfileSpace space(game, budget);
  PlanState state(game, JointPlan{std::vector<std::size_t>(game.robot_count(), 0)});
  for (std::uint64_t index = 0; index < space.size(); ++index) {
    if (index > 0) {
      // odometer step on the least significant digits
      for (std::size_t i = game.robot_count(); i-- > 0;) {
        const std::size_t next = state.plan()[i] + 1;
        if (next < game.actions(i).size()) {
          state.set_action(i, next);
          break;
        }
        state.set_action(i, 0);
      }
    }
    visit(index, state);
  }
}

inline bool is_nash(PlanState& state) {
  for (std::size_t i = 0; i < state.plan().size(); ++i) {
    const auto u = state.candidate_utilities(i);
    if (u[state.plan()[i]] < *std::max_element(u.begin(), u.end())) return false;
  }
  return true;
}

}  // namespace detail

inline constexpr std::uint64_t kDefaultProfileBudget = 10'000'000;

struct OptimumResult {
  Value value = 0;
  std::vector<JointPlan> witnesses;  // every maximizer, in profile order
};

inline OptimumResult brute_force_optimum(const GameInstance& game, std::uint64_t budget = kDefaultProfileBudget) {
  OptimumResult out{std::numeric_limits<Value>::min(), {}};
  detail::for_each_profile(game, budget, [&](std::uint64_t, PlanState& s) {
    if (s.value() > out.value) {
      out.value = s.value();
      out.witnesses.clear();
    }
    if (s.value() == out.value) out.witnesses.push_back(s.plan());
  });
  return out;
}

// Maximum of f over the full feasible trajectory space of every robot.
inline Value brute_force_optimum_full(const GameInstance& game, std::uint64_t trajectory_budget,
                                      std::uint64_t profile_budget = kDefaultProfileBudget) {
  std::vector<std::vector<Trajectory>> all;
  for (std::size_t i = 0; i < game.robot_count(); ++i)
    all.push_back(enumerate_feasible_trajectories(game.grid(), game.station_of(i), game.horizon(), trajectory_budget));
  GameOptions opts;
  opts.mode = game.mode();
  const auto full = GameInstance::with_trajectories(game.grid(), game.horizon(), game.robots(), game.tasks(), all, opts);
  return brute_force_optimum(full, profile_budget).value;
}

// No robot can raise its own utility by a unilateral switch (weak inequality).
inline bool is_nash_equilibrium(const GameInstance& game, const JointPlan& plan) {
  PlanState state(game, plan);
  return detail::is_nash(state);
}

// Ratio of the best to the worst equilibrium value, kept as the exact pair.
struct PriceOfAnarchy {
  Value best = 0;
  Value worst = 0;

  bool infinite() const noexcept { return worst == 0 && best > 0; }
  double ratio() const {
    if (best == 0) return 1.0;
    if (worst == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(best) / static_cast<double>(worst);
  }
  // Exact test of best/worst <= num/den.
  bool at_most(Value num, Value den) const {
    if (best == 0) return num >= den;
    if (worst == 0) return false;
    return best * den <= num * worst;
  }
};

struct EquilibriumReport {
  std::vector<JointPlan> equilibria;
  std::vector<Value> values;  // parallel to equilibria
  Value optimum = 0;          // max f over the joint action space
};

inline EquilibriumReport enumerate_nash(const GameInstance& game, std::uint64_t budget = kDefaultProfileBudget) {
  EquilibriumReport out;
  out.optimum = std::numeric_limits<Value>::min();
  detail::for_each_profile(game, budget, [&](std::uint64_t, PlanState& s) {
    out.optimum = std::max(out.optimum, s.value());
    if (detail::is_nash(s)) {
      out.equilibria.push_back(s.plan());
      out.values.push_back(s.value());
    }
  });
  return out;
}

inline PriceOfAnarchy price_of_anarchy(const EquilibriumReport& report) {
  if (report.values.empty()) throw DomainError("no equilibria to compare");
  return {*std::max_element(report.values.begin(), report.values.end()),
          *std::min_element(report.values.begin(), report.values.end())};
}

// PoA <= max(m/n, 1) for single-station games whose tasks are all simple.
// Throws Inapplicable when the game lacks that structure.
inline bool check_simple_task_bound(const GameInstance& game, const EquilibriumReport& report) {
  if (game.robot_count() == 0) throw Inapplicable("bound needs at least one robot");
  const std::size_t station = game.robots().front().station;
  for (const Robot& r : game.robots())
    if (r.station != station) throw Inapplicable("bound applies to single-station games only");
  for (const Task& t : game.tasks())
    if (!is_simple(t.value)) throw Inapplicable("bound applies to simple tasks only; task " + t.id + " is not");
  const auto m = static_cast<Value>(game.task_count());
  const auto n = static_cast<Value>(game.robot_count());
  const PriceOfAnarchy poa = price_of_anarchy(report);
  return m > n ? poa.at_most(m, n) : poa.at_most(1, 1);
}

struct StationaryDistribution {
  std::vector<double> probability;  // indexed by ProfileSpace order
  double residual = 0.0;            // max |pi P - pi|
};

inline constexpr std::uint64_t kDefaultChainBudget = 2048;

// Row-stochastic LLL transition matrix: a robot is picked with probability
// 1/n, then its next action is drawn from the softmax of its utilities.
inline std::vector<std::vector<double>> lll_transition_matrix(const GameInstance& game, double epsilon,
                                                              std::uint64_t budget = kDefaultChainBudget) {
  const ProfileSpace space(game, budget);
  const std::size_t n_states = space.size();
  const double pick = 1.0 / static_cast<double>(game.robot_count());
  std::vector<std::vector<double>> p(n_states, std::vector<double>(n_states, 0.0));
  detail::for_each_profile(game, budget, [&](std::uint64_t from, PlanState& s) {
    for (std::size_t i = 0; i < game.robot_count(); ++i) {
      const auto probs = lll_distribution(s.candidate_utilities(i), epsilon);
      JointPlan to = s.plan();
      for (std::size_t a = 0; a < probs.size(); ++a) {
        to[i] = a;
        p[from][space.encode(to)] += pick * probs[a];
      }
    }
  });
  return p;
}

// Exact stationary distribution of the LLL chain. Solved with the
// Grassmann-Taksar-Heyman elimination, which stays accurate when transition
// probabilities span hundreds of orders of magnitude (small epsilon), where
// power iteration would not converge in any practical number of steps.
inline StationaryDistribution lll_stationary_distribution(const GameInstance& game, double epsilon,
                                                          std::uint64_t budget = kDefaultChainBudget) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  const auto original = lll_transition_matrix(game, epsilon, budget);
  auto p = original;
  const std::size_t n = p.size();
  for (std::size_t k = n; k-- > 1;) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += p[k][j];
    if (!(s > 0.0)) throw std::runtime_error("LLL chain is reducible; stationary distribution is not unique");
    for (std::size_t i = 0; i < k; ++i) p[i][k] /= s;
    for (std::size_t i = 0; i < k; ++i) {
      const double f = p[i][k];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) p[i][j] += f * p[k][j];
    }
  }
  StationaryDistribution out;
  out.probability.assign(n, 0.0);
  out.probability[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < j; ++i) v += out.probability[i] * p[i][j];
    out.probability[j] = v;
  }
  double total = 0.0;
  for (double v : out.probability) total += v;
  for (double& v : out.probability) v /= total;

  for (std::size_t j = 0; j < n; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += out.probability[i] * original[i][j];
    out.residual = std::max(out.residual, std::abs(v - out.probability[j]));
  }
  if (out.residual >= 1e-12) throw std::runtime_error("stationary solve residual " + std::to_string(out.residual));
  return out;
}

// Fraction of rounds each joint profile is occupied along one LLL run.
inline std::vector<double> empirical_occupancy(const GameInstance& game, double epsilon, std::size_t rounds,
                                               std::uint64_t seed, std::uint64_t budget = kDefaultChainBudget) {
  const ProfileSpace space(game, budget);
  LearningConfig config{Algorithm::log_linear, epsilon, rounds, seed, std::nullopt};
  const RunTrace trace = run_log_linear(game, config);
  std::vector<double> freq(space.size(), 0.0);
  JointPlan plan = trace.initial_plan;
  for (const RoundRecord& r : trace.rounds) {
    plan[r.robot] = r.action;
    freq[space.encode(plan)] += 1.0;
  }
  for (double& f : freq) f /= static_cast<double>(rounds);
  return freq;
}

inline double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("distributions differ in support size");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d / 2.0;
}

// Stationary mass on joint plans attaining the optimum of f.
inline double mass_on_optimizers(const GameInstance& game, const StationaryDistribution& dist,
                                 std::uint64_t budget = kDefaultChainBudget) {
  const OptimumResult best = brute_force_optimum(game, budget);
  const ProfileSpace space(game, budget);
  double mass = 0.0;
  for (const JointPlan& w : best.witnesses) mass += dist.probability[space.encode(w)];
  return mass;
}

}  // namespace dte
