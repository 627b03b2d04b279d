// Acceptance gate: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace dte;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0 || secs < limit_s;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  char timing[64];
  if (limit_s > 0)
    std::snprintf(timing, sizeof timing, "%.2fs of %.0fs", secs, limit_s);
  else
    std::snprintf(timing, sizeof timing, "%.2fs", secs);
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << title << " | " << out.detail
            << (in_time ? "" : " | over time budget") << " | " << timing << std::endl;
}

std::string fmt(double v, int d = 2) { return format_fixed(v, d); }

std::string to_string_counter(const CounterVector& c) {
  std::string out = "[";
  for (std::size_t i = 0; i < c.size(); ++i) out += (i ? "," : "") + std::to_string(c[i]);
  return out + "]";
}

std::vector<GameInstance> fixture_games() {
  std::vector<GameInstance> out;
  for (const char* name : {"case_study_1.json", "case_study_2.json", "experiment_episodes.json", "example_1.json",
                           "example_2.json", "example_3.json"}) {
    const auto s = load_scenario(testing::fixture(name));
    if (s.episodes.empty()) {
      out.push_back(make_game(s));
    } else {
      for (const auto& e : s.episodes) out.push_back(make_game(s, e.name));
    }
  }
  return out;
}

GameInstance fixture_game(const std::string& file, const std::optional<std::string>& ep = std::nullopt) {
  return make_game(load_scenario(testing::fixture(file)), ep);
}

Outcome potential_identity() {
  const auto games = fixture_games();
  const std::size_t total = 10'000;
  std::size_t done = 0, bad_games = 0;
  for (std::size_t k = 0; k < games.size(); ++k) {
    const std::size_t share = total / games.size() + (k < total % games.size() ? 1 : 0);
    if (!verify_potential_identity(games[k], share, 1000 + k)) ++bad_games;
    done += share;
  }
  return {bad_games == 0 && done == total,
          std::to_string(done) + " deviations over " + std::to_string(games.size()) + " games, " +
              std::to_string(bad_games) + " games with a mismatch"};
}

Outcome lemma_one() {
  RandomStream rng(2024, StreamId::sampling);
  int checked = 0, skipped = 0, mismatches = 0;
  while (checked < 20) {
    const auto inst = testing::random_instance(rng, 5, 5, 2, 5, 4);
    const auto pair = testing::designed_optimum_pair(inst, 4'000'000);
    if (!pair) {
      ++skipped;
      continue;
    }
    if (pair->full != pair->designed) ++mismatches;
    ++checked;
  }
  return {mismatches == 0, std::to_string(checked) + " instances, " + std::to_string(mismatches) +
                               " mismatches (" + std::to_string(skipped) + " drawn instances over the profile cap)"};
}

Outcome heavy_box() {
  const auto s = load_scenario(testing::fixture("example_1.json"));
  const auto p1 = testing::traj({{2, 2}, {3, 3}, {3, 3}, {3, 3}, {3, 3}, {3, 3}, {2, 2}});
  const auto p3 = testing::traj({{4, 5}, {3, 4}, {3, 3}, {3, 3}, {3, 3}, {3, 4}, {4, 5}});
  const auto g =
      GameInstance::with_trajectories(s.environment.grid(), s.horizon, s.robots, s.tasks, {{p1}, {p1}, {p3}});
  const JointPlan p{{0, 0, 0}};
  const bool ok = counters(g, p, 0) == CounterVector{0, 2, 3, 3, 2, 0} &&
                  counters(g, p, 0, 2) == CounterVector{0, 2, 2, 2, 2, 0} && utility(g, p, 0) == 0 &&
                  utility(g, p, 1) == 0 && utility(g, p, 2) == 0 && global_value(g, p) == 1;
  std::ostringstream d;
  d << "c=" << to_string_counter(counters(g, p, 0)) << " c_-3=" << to_string_counter(counters(g, p, 0, 2))
    << " U=" << utility(g, p, 0) << "," << utility(g, p, 1) << "," << utility(g, p, 2) << " f=" << global_value(g, p);
  return {ok, d.str()};
}

Outcome overlap_example() {
  const auto s = load_scenario(testing::fixture("example_2.json"));
  const auto g = make_game(s);
  const auto& set = g.action_set(0);
  const auto& acts = g.actions(0);
  const auto expected = testing::traj({{2, 2}, {3, 3}, {3, 3}, {3, 3}, {2, 2}});
  const std::vector<int> z1{kNoTask, 0, 0, kNoTask}, z2{kNoTask, 0, 1, kNoTask};
  const bool ok = set.size() == 1 && set.actions[0] == expected && acts.size() == 2 && acts[0].trajectory == expected &&
                  acts[1].trajectory == expected && acts[0].commitments == z1 && acts[1].commitments == z2;
  return {ok, "|A_1|=" + std::to_string(set.size()) + " |A_1+|=" + std::to_string(acts.size())};
}

Outcome three_boxes() {
  const auto g = fixture_game("example_3.json");
  const auto report = enumerate_nash(g);
  const std::multiset<Value> values(report.values.begin(), report.values.end());
  const auto poa = price_of_anarchy(report);
  int off_equilibrium = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto t = run_best_response(g, {Algorithm::best_response, 0.2, 100, seed, std::nullopt});
    if (std::find(report.equilibria.begin(), report.equilibria.end(), t.final_plan) == report.equilibria.end())
      ++off_equilibrium;
  }
  const bool ok = report.equilibria.size() == 3 && values == std::multiset<Value>{2, 2, 10} && poa.best == 10 &&
                  poa.worst == 2 && off_equilibrium == 0;
  return {ok, std::to_string(report.equilibria.size()) + " equilibria, PoA " + std::to_string(poa.best) + "/" +
                  std::to_string(poa.worst) + ", " + std::to_string(off_equilibrium) +
                  "/100 BR runs ended off-equilibrium"};
}

Outcome simple_task_bound() {
  RandomStream rng(77, StreamId::sampling);
  int violations = 0, equilibria = 0;
  for (int k = 0; k < 100; ++k) {
    const auto inst = testing::random_instance(rng, 5, 5, 3, 5, 5, true, true);
    const GameInstance g(inst.grid, inst.horizon, inst.robots, inst.tasks);
    const auto report = enumerate_nash(g);
    equilibria += static_cast<int>(report.equilibria.size());
    if (!check_simple_task_bound(g, report)) ++violations;
  }
  return {violations == 0, "100 games, " + std::to_string(equilibria) + " equilibria, " +
                               std::to_string(violations) + " bound violations"};
}

Outcome br_monotone() {
  int games = 0, drops = 0, non_nash = 0;
  for (const auto& g : fixture_games()) {
    ++games;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto t = run_best_response(g, {Algorithm::best_response, 0.2, 300, seed, std::nullopt});
      Value prev = t.initial_value;
      for (const auto& r : t.rounds) {
        if (r.value < prev) ++drops;
        prev = r.value;
      }
      if (!is_nash_equilibrium(g, t.final_plan)) ++non_nash;
    }
  }
  return {drops == 0 && non_nash == 0, std::to_string(games) + " games x 3 seeds, " + std::to_string(drops) +
                                           " decreases, " + std::to_string(non_nash) + " non-equilibrium endpoints"};
}

Outcome stochastic_stability() {
  const auto g = fixture_game("example_3.json");
  const ProfileSpace space(g, kDefaultChainBudget);
  const auto best = brute_force_optimum(g, kDefaultChainBudget);
  const std::uint64_t optimal_eq = space.encode(best.witnesses.front());
  std::ostringstream d;
  bool ok = true;
  double prev_mass = -1.0;
  double mass_005 = 0.0;
  d << "mass on optimizers";
  for (double eps : {0.5, 0.2, 0.05}) {
    const auto dist = lll_stationary_distribution(g, eps);
    const double mass = mass_on_optimizers(g, dist);
    if (mass < prev_mass) ok = false;
    prev_mass = mass;
    d << " eps=" << eps << ":" << fmt(mass, 6);
    if (eps == 0.05) mass_005 = dist.probability[optimal_eq];
  }
  if (!(mass_005 > 0.95)) ok = false;
  d << "; TV over 1e5 rounds";
  for (double eps : {0.5, 0.2, 0.05}) {
    const auto exact = lll_stationary_distribution(g, eps);
    const double tv = total_variation(empirical_occupancy(g, eps, 100'000, 1), exact.probability);
    if (!(tv < 0.05)) ok = false;
    d << " eps=" << eps << ":" << fmt(tv, 4);
  }
  return {ok, d.str()};
}

Outcome case_study_one() {
  const auto s = load_scenario(testing::fixture("case_study_1.json"));
  const auto g = make_game(s);
  const auto lll = run_batch(g, {Algorithm::log_linear, 0.2, 300, 1, std::nullopt}, 100, 1, {4, false});
  const auto br = run_batch(g, {Algorithm::best_response, 0.2, 300, 1, std::nullopt}, 1000, 1, {4, false});
  const double avg300 = lll.series.at(299).avg;
  Value max_seen = 0;
  for (const auto& r : lll.series) max_seen = std::max(max_seen, r.max);
  const double br_mean = br.terminal_mean();
  const bool ok = std::abs(avg300 - 27.87) <= 1.0 && max_seen == 30 && std::abs(br_mean - 23.78) <= 1.0;
  std::ostringstream d;
  d << "|A|=" << g.actions(0).size() << "/" << g.actions(4).size() << "/" << g.actions(8).size()
    << "; LLL avg at 50/100/200/300: " << fmt(lll.series[49].avg) << "/" << fmt(lll.series[99].avg) << "/"
    << fmt(lll.series[199].avg) << "/" << fmt(avg300) << " (target 27.87 +-1.0), max " << max_seen
    << "; BR terminal mean " << fmt(br_mean) << " (target 23.78 +-1.0)";
  return {ok, d.str()};
}

Outcome case_study_two() {
  const auto s = load_scenario(testing::fixture("case_study_2.json"));
  const LearningConfig c{Algorithm::log_linear, 0.2, 600, 1, std::nullopt};
  const auto small = run_batch(make_game(s, std::string("n5_m10")), c, 10, 1, {4, false});
  const auto full = run_batch(make_game(s, std::string("n10_m10")), c, 10, 1, {4, false});
  Value reached = 0;
  for (const auto& r : full.series) reached = std::max(reached, r.max);
  const double avg = small.series.back().avg;
  const bool ok = std::abs(avg - 19.7) <= 1.0 && reached == 26;
  return {ok, "5 robots/10 tasks terminal min/avg/max " + std::to_string(small.series.back().min) + "/" + fmt(avg) +
                  "/" + std::to_string(small.series.back().max) + " (target 19.7 +-1.0); 10 robots/10 tasks best " +
                  std::to_string(reached) + " of 26"};
}

Outcome trajectory_counts() {
  RandomStream rng(99, StreamId::sampling);
  int mismatches = 0;
  for (int k = 0; k < 10; ++k) {
    const auto inst = testing::random_instance(rng, 5, 5, 1, 5, 1);
    const Cell s = inst.grid.stations()[0];
    const auto n = enumerate_feasible_trajectories(inst.grid, s, inst.horizon, 10'000'000).size();
    if (n != count_feasible_trajectories(inst.grid, s, inst.horizon)) ++mismatches;
  }
  const Grid g = testing::layout_grid();
  const auto c1 = count_feasible_trajectories(g, testing::kS1, 8);
  const auto c2 = count_feasible_trajectories(g, testing::kS2, 8);
  const auto c3 = count_feasible_trajectories(g, testing::kS3, 8);
  const bool ok = mismatches == 0 && c1 == 405417 && c2 == 161708 && c3 == 9254;
  return {ok, "10 random instances, " + std::to_string(mismatches) + " mismatches; layout counts " +
                  std::to_string(c1) + "/" + std::to_string(c2) + "/" + std::to_string(c3)};
}

}  // namespace

int main() {
  criterion(1, "potential identity, exact", 10, potential_identity);
  criterion(2, "optimum over designed action sets equals optimum over all trajectories", 60, lemma_one);
  criterion(3, "heavy-box example counters, utilities and value", 0, heavy_box);
  criterion(4, "overlapping-window example action sets", 0, overlap_example);
  criterion(5, "three-box example equilibria, PoA and BR endpoints", 0, three_boxes);
  criterion(6, "single-station simple-task PoA bound", 120, simple_task_bound);
  criterion(7, "BR monotonicity and absorption on every fixture", 0, br_monotone);
  criterion(8, "LLL stationary distribution on the three-box example", 60, stochastic_stability);
  criterion(9, "case study 1 statistics", 300, case_study_one);
  criterion(10, "case study 2 statistics", 600, case_study_two);
  criterion(11, "trajectory counting DP against enumeration", 0, trajectory_counts);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
