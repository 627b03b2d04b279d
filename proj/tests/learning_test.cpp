#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace dte {
namespace {

GameInstance fixture_game(const std::string& file, const std::optional<std::string>& ep = std::nullopt) {
  return make_game(load_scenario(testing::fixture(file)), ep);
}

TEST(Softmax, TwoActionOracle) {
  const std::vector<Value> u{0, 1};
  const auto p = lll_distribution(u, 0.5);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(2.0)), 1e-12);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

TEST(Softmax, LargeGapsStayFinite) {
  const std::vector<Value> u{0, 1000, 1000};
  const auto p = lll_distribution(u, 0.01);
  EXPECT_EQ(p[0], 0.0);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_THROW(lll_distribution(u, 0.0), DomainError);
}

TEST(BestResponse, KeepsTiesInActionOrder) {
  const std::vector<Value> u{3, 1, 3, 2};
  EXPECT_EQ(best_response_set(u), (std::vector<std::size_t>{0, 2}));
}

TEST(Sampling, WeightedDrawFollowsProbabilities) {
  RandomStream rng(4, StreamId::sampling);
  const std::vector<double> p{0.2, 0.0, 0.8};
  std::array<int, 3> hits{};
  for (int k = 0; k < 20000; ++k) ++hits[detail::sample_weighted(p, rng)];
  EXPECT_EQ(hits[1], 0);
  EXPECT_NEAR(hits[0] / 20000.0, 0.2, 0.02);
}

TEST(Config, Validation) {
  LearningConfig c;
  c.rounds = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c.rounds = 5;
  c.epsilon = -1;
  EXPECT_THROW(c.validate(), DomainError);
  c.algorithm = Algorithm::best_response;
  EXPECT_NO_THROW(c.validate());
}

// Value never drops along a BR trace, and the final plan is an equilibrium.
void expect_br_monotone_and_absorbing(const GameInstance& g, std::uint64_t seed, std::size_t rounds) {
  const RunTrace t = run_best_response(g, {Algorithm::best_response, 0.2, rounds, seed, std::nullopt});
  Value prev = t.initial_value;
  for (const auto& r : t.rounds) {
    EXPECT_GE(r.value, prev);
    prev = r.value;
  }
  EXPECT_TRUE(is_nash_equilibrium(g, t.final_plan));
  EXPECT_EQ(global_value(g, t.final_plan), t.final_value());
}

TEST(BestResponse, MonotoneAndAbsorbingOnFixtures) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    expect_br_monotone_and_absorbing(fixture_game("case_study_1.json"), seed, 300);
    expect_br_monotone_and_absorbing(fixture_game("example_3.json"), seed, 100);
    expect_br_monotone_and_absorbing(fixture_game("experiment_episodes.json", "episode_4"), seed, 100);
  }
}

TEST(BestResponse, EquilibriumIsAbsorbing) {
  const GameInstance g = fixture_game("example_3.json");
  const auto eq = enumerate_nash(g);
  for (const auto& p : eq.equilibria) {
    const RunTrace t = run_best_response(g, {Algorithm::best_response, 0.2, 50, 3, p});
    EXPECT_EQ(t.final_plan, p);
    for (const auto& r : t.rounds) EXPECT_EQ(r.value, t.initial_value);
  }
}

TEST(Dynamics, SameSeedSameTrace) {
  const GameInstance g = fixture_game("case_study_1.json");
  const LearningConfig c{Algorithm::log_linear, 0.2, 200, 42, std::nullopt};
  EXPECT_EQ(run_log_linear(g, c), run_log_linear(g, c));
  LearningConfig other = c;
  other.seed = 43;
  EXPECT_NE(run_log_linear(g, c).rounds, run_log_linear(g, other).rounds);
}

TEST(Dynamics, TraceRecordsAreConsistent) {
  const GameInstance g = fixture_game("case_study_1.json");
  const RunTrace t = run_log_linear(g, {Algorithm::log_linear, 0.2, 100, 8, std::nullopt});
  ASSERT_EQ(t.rounds.size(), 100u);
  JointPlan p = t.initial_plan;
  EXPECT_EQ(global_value(g, p), t.initial_value);
  for (std::size_t k = 0; k < t.rounds.size(); ++k) {
    EXPECT_EQ(t.rounds[k].round, k + 1);
    p[t.rounds[k].robot] = t.rounds[k].action;
    EXPECT_EQ(global_value(g, p), t.rounds[k].value);
  }
  EXPECT_EQ(p, t.final_plan);
}

TEST(Dynamics, WrongAlgorithmIsRejected) {
  const GameInstance g = fixture_game("example_3.json");
  EXPECT_THROW(run_best_response(g, {Algorithm::log_linear, 0.2, 5, 1, std::nullopt}), DomainError);
  EXPECT_THROW(run_log_linear(g, {Algorithm::best_response, 0.2, 5, 1, std::nullopt}), DomainError);
  EXPECT_THROW(run_learning(g, {Algorithm::best_response, 0.2, 5, 1, JointPlan{{0}}}), DomainError);
}

TEST(Batch, ThreadCountDoesNotChangeResults) {
  const GameInstance g = fixture_game("case_study_1.json");
  const LearningConfig c{Algorithm::log_linear, 0.2, 60, 1, std::nullopt};
  const auto a = run_batch(g, c, 12, 5, {1, true});
  const auto b = run_batch(g, c, 12, 5, {4, true});
  EXPECT_EQ(a.traces, b.traces);
  EXPECT_EQ(a.terminal_histogram, b.terminal_histogram);
  // run j uses seed base + j
  LearningConfig third = c;
  third.seed = 7;
  EXPECT_EQ(a.traces[2], run_log_linear(g, third));
}

TEST(Batch, SeriesAggregates) {
  const GameInstance g = fixture_game("case_study_1.json");
  const LearningConfig c{Algorithm::log_linear, 0.2, 40, 1, std::nullopt};
  const auto b = run_batch(g, c, 6, 1, {2, true});
  ASSERT_EQ(b.series.size(), 40u);
  for (std::size_t k = 0; k < 40; ++k) {
    Value lo = b.traces[0].rounds[k].value, hi = lo, sum = 0;
    for (const auto& t : b.traces) {
      lo = std::min(lo, t.rounds[k].value);
      hi = std::max(hi, t.rounds[k].value);
      sum += t.rounds[k].value;
    }
    EXPECT_EQ(b.series[k].round, k + 1);
    EXPECT_EQ(b.series[k].min, lo);
    EXPECT_EQ(b.series[k].max, hi);
    EXPECT_DOUBLE_EQ(b.series[k].avg, static_cast<double>(sum) / 6.0);
  }
  std::size_t runs = 0;
  for (const auto& [v, n] : b.terminal_histogram) runs += n;
  EXPECT_EQ(runs, 6u);
}

TEST(Batch, SingleRunHasFlatEnvelope) {
  const GameInstance g = fixture_game("example_3.json");
  const auto b = run_batch(g, {Algorithm::log_linear, 0.2, 30, 1, std::nullopt}, 1, 9);
  for (const auto& r : b.series) {
    EXPECT_EQ(r.min, r.max);
    EXPECT_DOUBLE_EQ(r.avg, static_cast<double>(r.min));
  }
}

TEST(Experiment, LogLinearReachesEpisodeOptimum) {
  const auto s = load_scenario(testing::fixture("experiment_episodes.json"));
  const std::vector<Value> optimum = {11, 11, 10, 12, 10};
  for (std::size_t e = 0; e < s.episodes.size(); ++e) {
    const GameInstance g = make_game(s, s.episodes[e].name);
    EXPECT_EQ(brute_force_optimum(g).value, optimum[e]);
    const auto b = run_batch(g, {Algorithm::log_linear, 0.2, 50, 1, std::nullopt}, 20, 1, {2, false});
    EXPECT_EQ(b.series.back().max, optimum[e]);
  }
}

}  // namespace
}  // namespace dte
