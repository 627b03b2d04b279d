#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dte/dte.hpp"

namespace fs = std::filesystem;
using dte::Algorithm;

namespace {

struct Selection {
  std::string file;
  std::string episode;

  std::optional<std::string> episode_opt() const {
    return episode.empty() ? std::nullopt : std::optional<std::string>(episode);
  }
};

struct LearningFlags {
  std::string algorithm;
  std::optional<double> epsilon;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--algorithm", algorithm, "br or lll")->check(CLI::IsMember({"br", "lll"}));
    cmd->add_option("--epsilon", epsilon, "LLL noise")->check(CLI::PositiveNumber);
    cmd->add_option("--rounds", rounds, "rounds per run")->check(CLI::PositiveNumber);
    cmd->add_option("--runs", runs, "independent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "base seed; run j uses seed+j");
    cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  // Flags override the scenario's learning block, which overrides built-ins.
  std::pair<dte::LearningConfig, std::size_t> resolve(const dte::ScenarioFile& s) const {
    const dte::LearningDefaults d = s.learning.value_or(dte::LearningDefaults{});
    dte::LearningConfig c;
    c.algorithm = d.algorithm;
    if (!algorithm.empty()) c.algorithm = algorithm == "br" ? Algorithm::best_response : Algorithm::log_linear;
    c.epsilon = epsilon.value_or(d.epsilon);
    c.rounds = rounds.value_or(d.rounds);
    c.seed = seed.value_or(d.seed);
    return {c, runs.value_or(d.runs)};
  }
};

std::vector<std::optional<std::string>> episodes_of(const dte::ScenarioFile& s, const std::string& only) {
  if (!only.empty()) return {only};
  if (s.episodes.empty()) return {std::nullopt};
  std::vector<std::optional<std::string>> out;
  for (const auto& e : s.episodes) out.emplace_back(e.name);
  return out;
}

std::string label(const std::optional<std::string>& episode) { return episode ? *episode : "-"; }

int cmd_validate(const Selection& sel) {
  const auto s = dte::load_scenario(sel.file);
  std::cout << sel.file << ": ok (" << s.tasks.size() << " tasks, " << s.robots.size() << " robots, T=" << s.horizon
            << ")\n";
  const auto options = dte::game_options_from_env();
  for (const auto& ep : episodes_of(s, sel.episode)) {
    const auto game = dte::make_game(s, ep, options);
    std::cout << "  episode " << label(ep) << ": " << game.robot_count() << " robots, " << game.task_count()
              << " tasks, mode " << to_string(game.mode()) << '\n';
  }
  return 0;
}

void print_action(std::ostream& os, const dte::Action& a, const dte::GameInstance& game) {
  os << "    " << a.trajectory;
  if (game.mode() == dte::GameMode::extended) {
    os << "  serve {";
    for (std::size_t t = 0; t < a.commitments.size(); ++t) {
      if (t) os << ',';
      os << (a.commitments[t] == dte::kNoTask ? std::string("0") : game.tasks()[a.commitments[t]].id);
    }
    os << '}';
  }
  os << '\n';
}

int cmd_actions(const Selection& sel, bool list) {
  const auto s = dte::load_scenario(sel.file);
  const auto options = dte::game_options_from_env();
  for (const auto& ep : episodes_of(s, sel.episode)) {
    const auto game = dte::make_game(s, ep, options);
    std::cout << "episode " << label(ep) << " (mode " << to_string(game.mode()) << ")\n";
    std::cout << "robot,station,trajectories" << (game.mode() == dte::GameMode::extended ? ",actions" : "") << '\n';
    for (const auto& r : dte::summarize_robots(game)) {
      std::cout << r.id << ",s" << r.station + 1 << ',' << r.trajectories;
      if (game.mode() == dte::GameMode::extended) std::cout << ',' << r.actions;
      std::cout << '\n';
    }
    if (!list) continue;
    std::vector<std::size_t> shown;
    for (std::size_t i = 0; i < game.robot_count(); ++i) {
      const std::size_t st = game.robots()[i].station;
      if (std::find(shown.begin(), shown.end(), st) != shown.end()) continue;
      shown.push_back(st);
      std::cout << "  station s" << st + 1 << ' ' << game.station_of(i) << ":\n";
      for (const auto& a : game.actions(i)) print_action(std::cout, a, game);
    }
  }
  return 0;
}

void print_summary(const dte::RunReport& r) {
  const auto& last = r.batch.series.back();
  std::cout << "episode " << label(r.episode) << ": " << to_string(r.config.algorithm) << " eps=" << r.config.epsilon
            << " rounds=" << r.config.rounds << " runs=" << r.runs << " seed=" << r.config.seed << '\n';
  std::cout << "  action sets:";
  for (const auto& rb : r.robots) std::cout << ' ' << rb.id << '=' << rb.actions;
  std::cout << "\n  final round min/avg/max: " << last.min << ' ' << dte::format_fixed(last.avg, 4) << ' ' << last.max
            << "\n  terminal mean: " << dte::format_fixed(r.batch.terminal_mean(), 4) << "\n  histogram:";
  for (const auto& [v, n] : r.batch.terminal_histogram) std::cout << ' ' << v << 'x' << n;
  std::cout << "\n  time: actions " << dte::format_fixed(r.timings.action_design_s, 3) << "s, learning "
            << dte::format_fixed(r.timings.learning_s, 3) << "s\n";
}

int cmd_plan(const Selection& sel, const LearningFlags& flags, const std::string& out, bool no_traces) {
  const auto s = dte::load_scenario(sel.file);
  const auto [config, runs] = flags.resolve(s);
  const auto options = dte::game_options_from_env();
  const auto eps = episodes_of(s, sel.episode);
  for (const auto& ep : eps) {
    const auto report = dte::run_experiment(s, ep, config, runs, {flags.threads, !no_traces}, options);
    print_summary(report);
    if (!out.empty()) {
      const fs::path dir = eps.size() > 1 ? fs::path(out) / *ep : fs::path(out);
      dte::write_report(report, dir);
      std::cout << "  wrote " << dir.string() << '\n';
    }
  }
  return 0;
}

std::string plan_string(const dte::JointPlan& p) {
  std::string out = "(";
  for (std::size_t i = 0; i < p.size(); ++i) out += (i ? "," : "") + std::to_string(p[i]);
  return out + ")";
}

struct AnalyzeFlags {
  bool nash = false, optimum = false, poa = false, stationary = false;
  std::vector<double> epsilon;
  std::optional<std::uint64_t> budget;
  std::string out;
};

int cmd_analyze(const Selection& sel, AnalyzeFlags f) {
  using json = nlohmann::ordered_json;
  const auto s = dte::load_scenario(sel.file);
  if (!f.nash && !f.optimum && !f.poa && !f.stationary) f.nash = f.optimum = f.poa = true;
  if (f.epsilon.empty()) f.epsilon = {s.learning ? s.learning->epsilon : 0.2};
  const std::uint64_t profile_budget = f.budget.value_or(dte::env_budget("DTE_PROFILE_BUDGET", dte::kDefaultProfileBudget));
  const std::uint64_t chain_budget = f.budget.value_or(dte::env_budget("DTE_CHAIN_BUDGET", dte::kDefaultChainBudget));
  const auto options = dte::game_options_from_env();

  json all = json::array();
  for (const auto& ep : episodes_of(s, sel.episode)) {
    const auto game = dte::make_game(s, ep, options);
    json j;
    j["episode"] = ep ? json(*ep) : json(nullptr);
    std::cout << "episode " << label(ep) << '\n';
    if (f.optimum) {
      const auto best = dte::brute_force_optimum(game, profile_budget);
      std::cout << "  optimum " << best.value << " (" << best.witnesses.size() << " maximizers)\n";
      j["optimum"] = {{"value", best.value}, {"maximizers", best.witnesses.size()}};
    }
    if (f.nash || f.poa) {
      const auto report = dte::enumerate_nash(game, profile_budget);
      if (f.nash) {
        std::cout << "  " << report.equilibria.size() << " equilibria\n";
        json list = json::array();
        for (std::size_t k = 0; k < report.equilibria.size(); ++k) {
          std::cout << "    " << plan_string(report.equilibria[k]) << " f=" << report.values[k] << '\n';
          list.push_back({{"plan", report.equilibria[k].choice}, {"value", report.values[k]}});
        }
        j["equilibria"] = list;
      }
      if (f.poa && !report.values.empty()) {
        const auto poa = dte::price_of_anarchy(report);
        std::cout << "  PoA " << poa.best << '/' << poa.worst << " = " << poa.ratio() << '\n';
        j["poa"] = {{"best", poa.best}, {"worst", poa.worst}, {"infinite", poa.infinite()}};
        try {
          const bool ok = dte::check_simple_task_bound(game, report);
          std::cout << "  single-station simple-task bound " << (ok ? "holds" : "VIOLATED") << '\n';
          j["poa"]["simple_task_bound"] = ok;
        } catch (const dte::Inapplicable& e) {
          j["poa"]["simple_task_bound"] = nullptr;
        }
      }
    }
    if (f.stationary) {
      json list = json::array();
      for (double eps : f.epsilon) {
        const auto dist = dte::lll_stationary_distribution(game, eps, chain_budget);
        const double mass = dte::mass_on_optimizers(game, dist, chain_budget);
        std::cout << "  eps=" << eps << ": stationary mass on optimizers " << dte::format_fixed(mass, 6)
                  << " (residual " << dist.residual << ")\n";
        list.push_back({{"epsilon", eps}, {"mass_on_optimizers", mass}, {"residual", dist.residual},
                        {"probability", dist.probability}});
      }
      j["stationary"] = list;
    }
    all.push_back(j);
  }
  if (!f.out.empty()) {
    const fs::path parent = fs::path(f.out).parent_path();
    std::error_code ec;
    if (!parent.empty()) fs::create_directories(parent, ec);
    if (ec) throw std::runtime_error("cannot create directory " + parent.string() + ": " + ec.message());
    std::ofstream os(f.out, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + f.out + " for writing");
    os << json{{"scenario", s.name}, {"digest", dte::scenario_digest(s)}, {"episodes", all}}.dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed for " + f.out);
  }
  return 0;
}

int cmd_batch(const std::vector<std::string>& files, const LearningFlags& flags, const std::string& out,
              bool traces) {
  const fs::path root(out);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create directory " + root.string() + ": " + ec.message());
  const fs::path summary_path = root / "summary.csv";
  std::ofstream summary(summary_path, std::ios::binary | std::ios::trunc);
  if (!summary) throw std::runtime_error("cannot open " + summary_path.string() + " for writing");
  summary << "scenario,episode,algorithm,epsilon,rounds,runs,seed,final_min,final_avg,final_max,terminal_mean\n";
  const auto options = dte::game_options_from_env();
  for (const auto& file : files) {
    const auto s = dte::load_scenario(file);
    const auto [config, runs] = flags.resolve(s);
    const std::string stem = fs::path(file).stem().string();
    for (const auto& ep : episodes_of(s, "")) {
      const auto report = dte::run_experiment(s, ep, config, runs, {flags.threads, traces}, options);
      print_summary(report);
      dte::write_report(report, ep ? root / stem / *ep : root / stem);
      const auto& last = report.batch.series.back();
      summary << stem << ',' << label(ep) << ',' << to_string(config.algorithm) << ','
              << dte::format_fixed(config.epsilon, 4) << ',' << config.rounds << ',' << runs << ',' << config.seed
              << ',' << last.min << ',' << dte::format_fixed(last.avg, 4) << ',' << last.max << ','
              << dte::format_fixed(report.batch.terminal_mean(), 4) << '\n';
    }
  }
  summary.flush();
  if (!summary) throw std::runtime_error("write failed for " + summary_path.string());
  std::cout << "wrote " << summary_path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed task execution planner"};
  app.require_subcommand(1);

  Selection sel;
  auto add_selection = [&sel](CLI::App* cmd) {
    cmd->add_option("scenario", sel.file, "scenario JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--episode", sel.episode, "episode name or 1-based index");
  };

  auto* validate = app.add_subcommand("validate", "parse and validate a scenario");
  add_selection(validate);

  bool list = false;
  auto* actions = app.add_subcommand("actions", "print action-set sizes");
  add_selection(actions);
  actions->add_flag("--trajectories", list, "list the actions of each station");

  LearningFlags learn;
  std::string out;
  bool no_traces = false;
  auto* plan = app.add_subcommand("plan", "run BR or LLL and write a report");
  add_selection(plan);
  learn.attach(plan);
  plan->add_option("--out", out, "report directory");
  plan->add_flag("--no-traces", no_traces, "skip per-run trace files");

  AnalyzeFlags af;
  auto* analyze = app.add_subcommand("analyze", "exhaustive equilibrium and stationary analysis");
  add_selection(analyze);
  analyze->add_flag("--nash", af.nash, "enumerate Nash equilibria");
  analyze->add_flag("--optimum", af.optimum, "maximum of f over the joint action space");
  analyze->add_flag("--poa", af.poa, "price of anarchy");
  analyze->add_flag("--stationary", af.stationary, "exact LLL stationary distribution");
  analyze->add_option("--epsilon", af.epsilon, "LLL noise values")->check(CLI::PositiveNumber);
  analyze->add_option("--budget", af.budget, "joint-profile budget");
  analyze->add_option("--out", af.out, "JSON output file");

  std::vector<std::string> files;
  LearningFlags batch_learn;
  std::string batch_out;
  bool batch_traces = false;
  auto* batch = app.add_subcommand("batch", "run every episode of several scenarios");
  batch->add_option("scenarios", files, "scenario JSON files")->required()->check(CLI::ExistingFile);
  batch_learn.attach(batch);
  batch->add_option("--out", batch_out, "output directory")->required();
  batch->add_flag("--traces", batch_traces, "write per-run trace files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(sel);
    if (*actions) return cmd_actions(sel, list);
    if (*plan) return cmd_plan(sel, learn, out, no_traces);
    if (*analyze) return cmd_analyze(sel, af);
    if (*batch) return cmd_batch(files, batch_learn, batch_out, batch_traces);
  } catch (const std::exception& e) {
    std::cerr << "dte: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
