#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "dte/error.hpp"
#include "dte/game.hpp"
#include "dte/rng.hpp"

namespace dte {

enum class Algorithm { best_response, log_linear };

inline const char* to_string(Algorithm a) { return a == Algorithm::best_response ? "br" : "lll"; }

struct LearningConfig {
  Algorithm algorithm = Algorithm::log_linear;
  double epsilon = 0.2;
  std::size_t rounds = 300;
  std::uint64_t seed = 1;
  std::optional<JointPlan> initial;  // random when empty

  void validate() const {
    if (rounds < 1) throw DomainError("rounds must be at least 1");
    if (algorithm == Algorithm::log_linear && !(epsilon > 0.0) ) throw DomainError("epsilon must be positive");
  }
};

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::size_t robot = 0;
  std::size_t action = 0;
  Value value = 0;  // f after the update
  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct RunTrace {
  JointPlan initial_plan;
  Value initial_value = 0;
  std::vector<RoundRecord> rounds;
  JointPlan final_plan;

  Value final_value() const { return rounds.empty() ? initial_value : rounds.back().value; }
  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

// Actions maximizing the robot's utility against the others' current actions.
// All ties retained, in action order.
inline std::vector<std::size_t> best_response_set(std::span<const Value> utilities) {
  const Value best = *std::max_element(utilities.begin(), utilities.end());
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < utilities.size(); ++a)
    if (utilities[a] == best) out.push_back(a);
  return out;
}

inline std::vector<std::size_t> best_response_set(const GameInstance& game, const JointPlan& plan,
                                                  std::size_t robot) {
  PlanState state(game, plan);
  return best_response_set(state.candidate_utilities(robot));
}

// Softmax of utilities / epsilon over the full action set, shifted by the
// maximum so every weight lies in (0, 1].
inline std::vector<double> lll_distribution(std::span<const Value> utilities, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  const Value best = *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> p(utilities.size());
  double total = 0.0;
  for (std::size_t a = 0; a < utilities.size(); ++a) {
    p[a] = std::exp(static_cast<double>(utilities[a] - best) / epsilon);
    total += p[a];
  }
  for (double& x : p) x /= total;
  return p;
}

inline std::vector<double> lll_distribution(const GameInstance& game, const JointPlan& plan, std::size_t robot,
                                            double epsilon) {
  PlanState state(game, plan);
  return lll_distribution(state.candidate_utilities(robot), epsilon);
}

namespace detail {

inline std::size_t sample_weighted(std::span<const double> probs, RandomStream& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return a;
  }
  // rounding left a sliver above the last cumulative sum
  for (std::size_t a = probs.size(); a-- > 0;)
    if (probs[a] > 0.0) return a;
  return probs.size() - 1;
}

template <typename Update>
RunTrace run_dynamics(const GameInstance& game, const LearningConfig& config, Update&& update) {
  config.validate();
  if (game.robot_count() == 0) throw DomainError("learning needs at least one robot");
  RandomStream init(config.seed, StreamId::initial_plan);
  RandomStream agents(config.seed, StreamId::agent_pick);
  RandomStream choices(config.seed, StreamId::action_sample);

  JointPlan start = config.initial ? *config.initial : random_plan(game, init);
  PlanState state(game, start);
  RunTrace trace{start, state.value(), {}, {}};
  trace.rounds.reserve(config.rounds);
  for (std::size_t k = 1; k <= config.rounds; ++k) {
    const std::size_t robot = agents.uniform_index(game.robot_count());
    const std::vector<Value> u = state.candidate_utilities(robot);
    const std::size_t next = update(u, state.plan()[robot], choices);
    state.set_action(robot, next);
    trace.rounds.push_back({k, robot, next, state.value()});
  }
  trace.final_plan = state.plan();
  return trace;
}

}  // namespace detail

// Best response: a uniformly picked robot keeps its action when it is already
// a best response, otherwise moves to a uniformly random best response.
inline RunTrace run_best_response(const GameInstance& game, const LearningConfig& config) {
  if (config.algorithm != Algorithm::best_response) throw DomainError("config is not a best-response config");
  return detail::run_dynamics(game, config, [](std::span<const Value> u, std::size_t current, RandomStream& rng) {
    const auto best = best_response_set(u);
    if (std::find(best.begin(), best.end(), current) != best.end()) return current;
    return best[rng.uniform_index(best.size())];
  });
}

// Log-linear learning: a uniformly picked robot resamples its action from the
// softmax of its utilities.
inline RunTrace run_log_linear(const GameInstance& game, const LearningConfig& config) {
  if (config.algorithm != Algorithm::log_linear) throw DomainError("config is not a log-linear config");
  const double eps = config.epsilon;
  return detail::run_dynamics(game, config, [eps](std::span<const Value> u, std::size_t, RandomStream& rng) {
    const auto p = lll_distribution(u, eps);
    return detail::sample_weighted(p, rng);
  });
}

inline RunTrace run_learning(const GameInstance& game, const LearningConfig& config) {
  return config.algorithm == Algorithm::best_response ? run_best_response(game, config)
                                                      : run_log_linear(game, config);
}

struct SeriesRow {
  std::size_t round = 0;
  Value min = 0;
  double avg = 0.0;
  Value max = 0;
};

struct BatchResult {
  std::vector<SeriesRow> series;  // one row per round, 1-based
  std::map<Value, std::size_t> terminal_histogram;
  std::vector<RunTrace> traces;  // empty unless kept

  double terminal_mean() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [v, count] : terminal_histogram) {
      sum += static_cast<double>(v) * count;
      n += count;
    }
    return n ? sum / n : 0.0;
  }
};

struct BatchOptions {
  std::size_t threads = 1;
  bool keep_traces = false;
};

// Independent runs j = 0..n_runs-1 seeded base_seed + j. Results do not
// depend on the thread count.
inline BatchResult run_batch(const GameInstance& game, const LearningConfig& config, std::size_t n_runs,
                             std::uint64_t base_seed, const BatchOptions& options = {}) {
  if (n_runs < 1) throw DomainError("n_runs must be at least 1");
  config.validate();
  std::vector<RunTrace> traces(n_runs);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t j = first; j < n_runs; j += stride) {
      LearningConfig c = config;
      c.seed = base_seed + j;
      traces[j] = run_learning(game, c);
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, n_runs));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < threads; ++w) jobs.push_back(std::async(std::launch::async, work, w, threads));
    for (auto& j : jobs) j.get();
  }

  BatchResult out;
  out.series.resize(config.rounds);
  for (std::size_t k = 0; k < config.rounds; ++k) {
    SeriesRow& row = out.series[k];
    row.round = k + 1;
    row.min = std::numeric_limits<Value>::max();
    row.max = std::numeric_limits<Value>::min();
    Value sum = 0;
    for (const auto& t : traces) {
      const Value v = t.rounds[k].value;
      row.min = std::min(row.min, v);
      row.max = std::max(row.max, v);
      sum += v;
    }
    row.avg = static_cast<double>(sum) / static_cast<double>(n_runs);
  }
  for (const auto& t : traces) ++out.terminal_histogram[t.final_value()];
  if (options.keep_traces) out.traces = std::move(traces);
  return out;
}

}  // namespace dte
