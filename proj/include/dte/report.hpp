#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dte/game.hpp"
#include "dte/learning.hpp"
#include "dte/scenario.hpp"

namespace dte {

struct Timings {
  double action_design_s = 0.0;
  double learning_s = 0.0;
};

struct RobotSummary {
  std::string id;
  std::size_t station = 0;
  std::size_t trajectories = 0;  // |A_i|
  std::size_t actions = 0;       // |A_i+| in extended mode, else |A_i|
};

struct RunReport {
  std::string scenario_name;
  std::string scenario_digest;
  std::optional<std::string> episode;
  GameMode mode = GameMode::plain;
  LearningConfig config;  // config.seed is the base seed
  std::size_t runs = 1;
  std::vector<RobotSummary> robots;
  BatchResult batch;
  Timings timings;  // the only field not reproducible from the inputs
};

inline std::vector<RobotSummary> summarize_robots(const GameInstance& game) {
  std::vector<RobotSummary> out;
  for (std::size_t i = 0; i < game.robot_count(); ++i)
    out.push_back({game.robots()[i].id, game.robots()[i].station, game.action_set(i).size(), game.actions(i).size()});
  return out;
}

inline RunReport run_experiment(const ScenarioFile& scenario, const std::optional<std::string>& episode,
                                const LearningConfig& config, std::size_t runs, const BatchOptions& batch = {},
                                const GameOptions& game_options = {}) {
  using clock = std::chrono::steady_clock;
  RunReport report;
  report.scenario_name = scenario.name;
  report.scenario_digest = scenario_digest(scenario);
  report.episode = episode;
  report.config = config;
  report.config.initial.reset();
  report.runs = runs;

  const auto t0 = clock::now();
  const GameInstance game = make_game(scenario, episode, game_options);
  const auto t1 = clock::now();
  report.batch = run_batch(game, config, runs, config.seed, batch);
  const auto t2 = clock::now();

  report.mode = game.mode();
  report.robots = summarize_robots(game);
  report.timings.action_design_s = std::chrono::duration<double>(t1 - t0).count();
  report.timings.learning_s = std::chrono::duration<double>(t2 - t1).count();
  return report;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline void write_series_csv(std::ostream& os, const std::vector<SeriesRow>& series) {
  os << "round,min,avg,max\n";
  for (const SeriesRow& r : series) os << r.round << ',' << r.min << ',' << format_fixed(r.avg, 4) << ',' << r.max << '\n';
}

inline std::string series_csv(const std::vector<SeriesRow>& series) {
  std::ostringstream os;
  write_series_csv(os, series);
  return os.str();
}

inline void write_trace_csv(std::ostream& os, const RunTrace& trace, const std::vector<RobotSummary>& robots) {
  os << "round,robot,action,value\n";
  os << 0 << ',' << ',' << ',' << trace.initial_value << '\n';
  for (const RoundRecord& r : trace.rounds) os << r.round << ',' << robots.at(r.robot).id << ',' << r.action << ',' << r.value << '\n';
}

inline nlohmann::ordered_json report_json(const RunReport& report) {
  using json = nlohmann::ordered_json;
  json out;
  out["scenario"] = {{"name", report.scenario_name},
                     {"digest", report.scenario_digest},
                     {"episode", report.episode ? json(*report.episode) : json(nullptr)}};
  out["mode"] = to_string(report.mode);
  out["config"] = {{"algorithm", to_string(report.config.algorithm)},
                   {"epsilon", report.config.epsilon},
                   {"rounds", report.config.rounds},
                   {"runs", report.runs},
                   {"seed", report.config.seed}};
  out["robots"] = json::array();
  for (const RobotSummary& r : report.robots)
    out["robots"].push_back(
        {{"id", r.id}, {"station", r.station}, {"trajectories", r.trajectories}, {"actions", r.actions}});
  out["series"] = json::array();
  for (const SeriesRow& r : report.batch.series)
    out["series"].push_back({{"round", r.round}, {"min", r.min}, {"avg", std::round(r.avg * 1e4) / 1e4}, {"max", r.max}});
  out["terminal_histogram"] = json::array();
  for (const auto& [v, count] : report.batch.terminal_histogram)
    out["terminal_histogram"].push_back({{"value", v}, {"count", count}});
  out["terminal_mean"] = std::round(report.batch.terminal_mean() * 1e4) / 1e4;
  out["traces"] = json::array();
  for (std::size_t j = 0; j < report.batch.traces.size(); ++j) {
    const RunTrace& t = report.batch.traces[j];
    json rounds = json::array();
    for (const RoundRecord& r : t.rounds) rounds.push_back(json::array({r.robot, r.action, r.value}));
    out["traces"].push_back({{"seed", report.config.seed + j},
                             {"initial_plan", t.initial_plan.choice},
                             {"initial_value", t.initial_value},
                             {"rounds", rounds},
                             {"final_plan", t.final_plan.choice},
                             {"final_value", t.final_value()}});
  }
  out["timings"] = {{"action_design_s", format_fixed(report.timings.action_design_s, 6)},
                    {"learning_s", format_fixed(report.timings.learning_s, 6)}};
  return out;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace detail

// Writes <dir>/series.csv, <dir>/report.json and, when traces were kept,
// <dir>/runs/run_<j>.csv.
inline void write_report(const RunReport& report, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());

  const fs::path csv = dir / "series.csv";
  auto out = detail::open_for_write(csv);
  write_series_csv(out, report.batch.series);
  detail::finish_write(out, csv);

  const fs::path js = dir / "report.json";
  auto jout = detail::open_for_write(js);
  jout << report_json(report).dump(2) << '\n';
  detail::finish_write(jout, js);

  if (report.batch.traces.empty()) return;
  const fs::path runs = dir / "runs";
  fs::create_directories(runs, ec);
  if (ec) throw std::runtime_error("cannot create directory " + runs.string() + ": " + ec.message());
  for (std::size_t j = 0; j < report.batch.traces.size(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu.csv", j);
    const fs::path p = runs / name;
    auto tout = detail::open_for_write(p);
    write_trace_csv(tout, report.batch.traces[j], report.robots);
    detail::finish_write(tout, p);
  }
}

}  // namespace dte
