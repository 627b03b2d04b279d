#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dte/error.hpp"
#include "dte/grid.hpp"

namespace dte {

// Task values are exact integers so potential-game identities hold with equality.
using Value = std::int64_t;

// Counter entries for one task: robots staying at the task location at each
// step of the window [arrival, departure).
using CounterVector = std::vector<int>;

// v̄ iff the largest counter entry reaches the threshold.
struct ThresholdMax {
  Value max = 0;
  int threshold = 1;
  friend bool operator==(const ThresholdMax&, const ThresholdMax&) = default;
};

// v̄ iff the counter entries sum to at least the threshold.
struct ThresholdSum {
  Value max = 0;
  int threshold = 1;
  friend bool operator==(const ThresholdSum&, const ThresholdSum&) = default;
};

// Completed by one robot in one step; identical to ThresholdMax{max, 1} but
// tagged so structural checks can recognise it.
struct SimpleValue {
  Value max = 0;
  friend bool operator==(const SimpleValue&, const SimpleValue&) = default;
};

// v̄ iff some step has at least `heavy` robots and the steps strictly after it
// accumulate at least `follow` robot-steps.
struct SequentialHeavyLight {
  Value max = 0;
  int heavy = 2;
  int follow = 2;
  friend bool operator==(const SequentialHeavyLight&, const SequentialHeavyLight&) = default;
};

// Arbitrary monotone function given pointwise. Counters missing from the
// table take `fallback` when present and are an error otherwise.
struct TableValue {
  Value max = 0;
  std::map<CounterVector, Value> entries;
  std::optional<Value> fallback;
  friend bool operator==(const TableValue&, const TableValue&) = default;
};

using ValueSpec = std::variant<ThresholdMax, ThresholdSum, SimpleValue, SequentialHeavyLight, TableValue>;

inline Value value_cap(const ValueSpec& spec) {
  return std::visit([](const auto& s) { return s.max; }, spec);
}

// True for value functions that a single robot completes with a single stay.
inline bool is_simple(const ValueSpec& spec) {
  if (std::holds_alternative<SimpleValue>(spec)) return true;
  if (const auto* m = std::get_if<ThresholdMax>(&spec)) return m->threshold == 1;
  if (const auto* s = std::get_if<ThresholdSum>(&spec)) return s->threshold == 1;
  return false;
}

namespace detail {

struct ValueEvaluator {
  std::span<const int> c;

  Value operator()(const ThresholdMax& s) const {
    const int top = c.empty() ? 0 : *std::max_element(c.begin(), c.end());
    return top >= s.threshold ? s.max : 0;
  }
  Value operator()(const ThresholdSum& s) const {
    return std::accumulate(c.begin(), c.end(), 0) >= s.threshold ? s.max : 0;
  }
  Value operator()(const SimpleValue& s) const {
    return std::any_of(c.begin(), c.end(), [](int v) { return v >= 1; }) ? s.max : 0;
  }
  Value operator()(const SequentialHeavyLight& s) const {
    // Suffix sums scanned right to left.
    int after = 0;
    for (std::size_t i = c.size(); i-- > 0;) {
      if (c[i] >= s.heavy && after >= s.follow) return s.max;
      after += c[i];
    }
    return 0;
  }
  Value operator()(const TableValue& s) const {
    auto it = s.entries.find(CounterVector(c.begin(), c.end()));
    if (it != s.entries.end()) return it->second;
    if (s.fallback) return *s.fallback;
    throw DomainError("value table has no entry for the counter vector");
  }
};

}  // namespace detail

inline Value evaluate_value(const ValueSpec& spec, std::span<const int> counter) {
  return std::visit(detail::ValueEvaluator{counter}, spec);
}

// Rejects specs whose parameters break 0 <= v <= v̄ or v̄ > 0.
inline void validate_value_spec(const ValueSpec& spec) {
  if (value_cap(spec) <= 0) throw DomainError("value cap must be positive");
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ThresholdMax> || std::is_same_v<S, ThresholdSum>) {
          if (s.threshold < 0) throw DomainError("threshold must be non-negative");
        } else if constexpr (std::is_same_v<S, SequentialHeavyLight>) {
          if (s.heavy < 0 || s.follow < 0) throw DomainError("heavy/follow counts must be non-negative");
        } else if constexpr (std::is_same_v<S, TableValue>) {
          for (const auto& [key, v] : s.entries) {
            if (v < 0 || v > s.max) throw DomainError("table value outside [0, max]");
            if (std::any_of(key.begin(), key.end(), [](int e) { return e < 0; }))
              throw DomainError("table counter entries must be non-negative");
          }
          if (s.fallback && (*s.fallback < 0 || *s.fallback > s.max))
            throw DomainError("table fallback outside [0, max]");
        }
      },
      spec);
}

struct Task {
  std::string id;
  Cell location;
  int arrival = 0;    // first step of the window
  int departure = 1;  // one past the last step of the window
  ValueSpec value = SimpleValue{1};

  int window_length() const noexcept { return departure - arrival; }
  bool active_at(int t) const noexcept { return arrival <= t && t < departure; }

  friend bool operator==(const Task&, const Task&) = default;
};

inline Value evaluate_value(const Task& task, std::span<const int> counter) {
  if (static_cast<int>(counter.size()) != task.window_length())
    throw DomainError("counter length " + std::to_string(counter.size()) + " does not match window of task " +
                      task.id);
  return evaluate_value(task.value, counter);
}

// Checks the task against its environment and episode length.
inline void validate_task(const Task& task, const Grid& grid, int horizon) {
  if (!(0 <= task.arrival && task.arrival < task.departure && task.departure <= horizon))
    throw DomainError("task " + task.id + " has invalid window [" + std::to_string(task.arrival) + ", " +
                      std::to_string(task.departure) + ")");
  if (!grid.is_feasible(task.location))
    throw DomainError("task " + task.id + " location " + to_string(task.location) + " is not feasible");
  validate_value_spec(task.value);
}

// Pairs (i, j), i < j, of tasks sharing a location with overlapping windows.
// Non-empty means the game needs per-step service commitments.
inline std::vector<std::pair<std::size_t, std::size_t>> check_no_overlap(std::span<const Task> tasks) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    for (std::size_t j = i + 1; j < tasks.size(); ++j) {
      const Task& a = tasks[i];
      const Task& b = tasks[j];
      if (a.location == b.location && std::min(a.departure, b.departure) > std::max(a.arrival, b.arrival))
        out.emplace_back(i, j);
    }
  return out;
}

// Exhaustive elementwise-monotonicity check over counters with entries in
// [0, robot_cap]. It suffices to compare every counter with each of its
// single-entry increments.
inline bool validate_monotonicity(const ValueSpec& spec, int window_len, int robot_cap,
                                  std::uint64_t budget = 1'000'000) {
  if (window_len < 1 || robot_cap < 0) throw DomainError("window length must be positive and cap non-negative");
  std::uint64_t total = 1;
  for (int i = 0; i < window_len; ++i) {
    if (__builtin_mul_overflow(total, static_cast<std::uint64_t>(robot_cap) + 1, &total) || total > budget)
      throw BudgetExceeded("monotonicity check", total, budget);
  }
  CounterVector c(static_cast<std::size_t>(window_len), 0);
  for (std::uint64_t n = 0; n < total; ++n) {
    const Value here = evaluate_value(spec, c);
    if (here < 0 || here > value_cap(spec)) return false;
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k] == robot_cap) continue;
      ++c[k];
      const Value up = evaluate_value(spec, c);
      --c[k];
      if (up < here) return false;
    }
    // odometer increment
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (++c[k] <= robot_cap) break;
      c[k] = 0;
    }
  }
  return true;
}

}  // namespace dte
