#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dte/error.hpp"
#include "dte/game.hpp"
#include "dte/learning.hpp"
#include "dte/tasks.hpp"

namespace dte {

struct Environment {
  int width = 1;
  int height = 1;
  std::vector<Cell> obstacles;
  std::vector<Cell> stations;

  Grid grid() const { return Grid(width, height, obstacles, stations); }
  friend bool operator==(const Environment&, const Environment&) = default;
};

// A named selection of tasks (by id) and optionally its own robot roster.
struct Episode {
  std::string name;
  std::vector<std::string> task_ids;
  std::optional<std::vector<Robot>> robots;
  friend bool operator==(const Episode&, const Episode&) = default;
};

struct LearningDefaults {
  Algorithm algorithm = Algorithm::log_linear;
  double epsilon = 0.2;
  std::size_t rounds = 300;
  std::size_t runs = 1;
  std::uint64_t seed = 1;
  friend bool operator==(const LearningDefaults&, const LearningDefaults&) = default;
};

struct ScenarioFile {
  std::string name;
  Environment environment;
  int horizon = 1;
  std::vector<Robot> robots;
  std::vector<Task> tasks;
  std::vector<Episode> episodes;
  std::optional<LearningDefaults> learning;
  friend bool operator==(const ScenarioFile&, const ScenarioFile&) = default;
};

namespace detail {

using json = nlohmann::ordered_json;

class FieldReader {
 public:
  FieldReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ParseError(path_, "expected an object");
  }

  // Rejects keys outside `allowed` so misspelled fields do not pass silently.
  void only(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [key, _] : node_.items())
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw ParseError(join(key), "unknown field");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& at(const std::string& key) const {
    if (!node_.contains(key)) throw ParseError(join(key), "missing required field");
    return node_.at(key);
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  long long integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ParseError(join(key), "expected an integer");
    return v.get<long long>();
  }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
      throw ParseError(join(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ParseError(join(key), "expected a number");
    return v.get<double>();
  }

  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ParseError(join(key), "expected a string");
    return v.get<std::string>();
  }

  const json& array(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ParseError(join(key), "expected an array");
    return v;
  }

 private:
  const json& node_;
  std::string path_;
};

inline std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline Cell read_cell(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    throw ParseError(path, "expected a cell [x, y]");
  return Cell{v[0].get<int>(), v[1].get<int>()};
}

inline json write_cell(const Cell& c) { return json::array({c.x, c.y}); }

inline ValueSpec read_value(const json& node, const std::string& path) {
  FieldReader r(node, path);
  const std::string type = r.string("type");
  const auto max = static_cast<Value>(r.integer("max"));
  if (max <= 0) throw ParseError(r.join("max"), "value cap must be positive");
  auto non_negative = [&](const std::string& key) {
    const long long v = r.integer(key);
    if (v < 0) throw ParseError(r.join(key), "must be non-negative");
    return static_cast<int>(v);
  };
  if (type == "threshold_max") {
    r.only({"type", "max", "threshold"});
    return ThresholdMax{max, non_negative("threshold")};
  }
  if (type == "threshold_sum") {
    r.only({"type", "max", "threshold"});
    return ThresholdSum{max, non_negative("threshold")};
  }
  if (type == "simple") {
    r.only({"type", "max"});
    return SimpleValue{max};
  }
  if (type == "sequential_heavy_light") {
    r.only({"type", "max", "heavy", "follow"});
    return SequentialHeavyLight{max, non_negative("heavy"), non_negative("follow")};
  }
  if (type == "table") {
    r.only({"type", "max", "entries", "default"});
    TableValue table{max, {}, std::nullopt};
    const json& entries = r.array("entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string at = indexed(r.join("entries"), i);
      FieldReader e(entries[i], at);
      e.only({"counter", "value"});
      CounterVector key;
      for (const auto& c : e.array("counter")) {
        if (!c.is_number_integer() || c.get<long long>() < 0)
          throw ParseError(e.join("counter"), "counter entries must be non-negative integers");
        key.push_back(c.get<int>());
      }
      const auto v = static_cast<Value>(e.integer("value"));
      if (v < 0 || v > max) throw ParseError(e.join("value"), "value outside [0, max]");
      if (!table.entries.emplace(std::move(key), v).second) throw ParseError(at, "duplicate counter entry");
    }
    if (r.has("default")) {
      const auto d = static_cast<Value>(r.integer("default"));
      if (d < 0 || d > max) throw ParseError(r.join("default"), "default outside [0, max]");
      table.fallback = d;
    }
    return table;
  }
  throw ParseError(r.join("type"), "unknown value function type '" + type + "'");
}

inline json write_value(const ValueSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        json out;
        if constexpr (std::is_same_v<S, ThresholdMax>) {
          out["type"] = "threshold_max";
          out["max"] = s.max;
          out["threshold"] = s.threshold;
        } else if constexpr (std::is_same_v<S, ThresholdSum>) {
          out["type"] = "threshold_sum";
          out["max"] = s.max;
          out["threshold"] = s.threshold;
        } else if constexpr (std::is_same_v<S, SimpleValue>) {
          out["type"] = "simple";
          out["max"] = s.max;
        } else if constexpr (std::is_same_v<S, SequentialHeavyLight>) {
          out["type"] = "sequential_heavy_light";
          out["max"] = s.max;
          out["heavy"] = s.heavy;
          out["follow"] = s.follow;
        } else {
          out["type"] = "table";
          out["max"] = s.max;
          out["entries"] = json::array();
          for (const auto& [key, v] : s.entries) out["entries"].push_back({{"counter", key}, {"value", v}});
          if (s.fallback) out["default"] = *s.fallback;
        }
        return out;
      },
      spec);
}

inline std::vector<Robot> read_robots(const json& list, const std::string& path, std::size_t n_stations) {
  if (!list.is_array()) throw ParseError(path, "expected an array");
  std::vector<Robot> robots;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < list.size(); ++i) {
    FieldReader r(list[i], indexed(path, i));
    r.only({"id", "station"});
    Robot robot{r.string("id"), 0};
    const long long s = r.integer("station");
    if (s < 0 || static_cast<std::size_t>(s) >= n_stations)
      throw ParseError(r.join("station"), "station index " + std::to_string(s) + " does not exist");
    robot.station = static_cast<std::size_t>(s);
    if (!seen.insert(robot.id).second) throw ParseError(r.join("id"), "duplicate robot id '" + robot.id + "'");
    robots.push_back(std::move(robot));
  }
  return robots;
}

inline json write_robots(const std::vector<Robot>& robots) {
  json out = json::array();
  for (const Robot& r : robots) out.push_back({{"id", r.id}, {"station", r.station}});
  return out;
}

inline std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline constexpr std::uint64_t kMonotonicityBudget = 1'000'000;

// Parses and fully validates a scenario: bounds, windows, station
// feasibility, unique ids, and the monotonicity gate for table value
// functions (checked up to the largest robot roster in the file).
inline ScenarioFile parse_scenario(std::string_view text) {
  using detail::FieldReader;
  using detail::indexed;
  detail::json root;
  try {
    root = detail::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("", "JSON syntax error at " + detail::line_column(text, e.byte ? e.byte - 1 : 0) + ": " + e.what());
  }
  FieldReader top(root, "");
  top.only({"name", "environment", "horizon", "robots", "tasks", "episodes", "learning"});

  ScenarioFile out;
  if (top.has("name")) out.name = top.string("name");

  {
    FieldReader env(top.at("environment"), "environment");
    env.only({"width", "height", "obstacles", "stations"});
    out.environment.width = static_cast<int>(env.integer("width"));
    out.environment.height = static_cast<int>(env.integer("height"));
    if (out.environment.width < 1) throw ParseError("environment.width", "must be positive");
    if (out.environment.height < 1) throw ParseError("environment.height", "must be positive");
    const Grid bounds(out.environment.width, out.environment.height);
    std::set<Cell> blocked;
    if (env.has("obstacles")) {
      const auto& list = env.array("obstacles");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const Cell c = detail::read_cell(list[i], indexed("environment.obstacles", i));
        if (!bounds.contains(c)) throw ParseError(indexed("environment.obstacles", i), "cell " + to_string(c) + " is out of bounds");
        if (!blocked.insert(c).second) throw ParseError(indexed("environment.obstacles", i), "duplicate obstacle");
        out.environment.obstacles.push_back(c);
      }
    }
    const auto& list = env.array("stations");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = indexed("environment.stations", i);
      const Cell c = detail::read_cell(list[i], at);
      if (!bounds.contains(c)) throw ParseError(at, "station " + to_string(c) + " is out of bounds");
      if (blocked.count(c)) throw ParseError(at, "station " + to_string(c) + " is an obstacle");
      out.environment.stations.push_back(c);
    }
  }
  const Grid grid = out.environment.grid();

  out.horizon = static_cast<int>(top.integer("horizon"));
  if (out.horizon < 1) throw ParseError("horizon", "must be at least 1");

  const std::size_t n_stations = out.environment.stations.size();
  out.robots = detail::read_robots(top.array("robots"), "robots", n_stations);

  std::set<std::string> task_ids;
  const auto& task_list = top.array("tasks");
  for (std::size_t i = 0; i < task_list.size(); ++i) {
    const std::string at = indexed("tasks", i);
    FieldReader r(task_list[i], at);
    r.only({"id", "location", "arrival", "departure", "value"});
    Task task;
    task.id = r.string("id");
    if (!task_ids.insert(task.id).second) throw ParseError(r.join("id"), "duplicate task id '" + task.id + "'");
    task.location = detail::read_cell(r.at("location"), r.join("location"));
    if (!grid.contains(task.location))
      throw ParseError(r.join("location"), "cell " + to_string(task.location) + " is out of bounds");
    if (!grid.is_feasible(task.location))
      throw ParseError(r.join("location"), "cell " + to_string(task.location) + " is an obstacle");
    task.arrival = static_cast<int>(r.integer("arrival"));
    task.departure = static_cast<int>(r.integer("departure"));
    if (task.arrival < 0) throw ParseError(r.join("arrival"), "must be non-negative");
    if (task.arrival >= task.departure)
      throw ParseError(at, "empty time window [" + std::to_string(task.arrival) + ", " +
                               std::to_string(task.departure) + ")");
    if (task.departure > out.horizon)
      throw ParseError(r.join("departure"), "departure " + std::to_string(task.departure) + " exceeds horizon " +
                                                std::to_string(out.horizon));
    task.value = detail::read_value(r.at("value"), r.join("value"));
    out.tasks.push_back(std::move(task));
  }

  std::size_t max_roster = out.robots.size();
  if (top.has("episodes")) {
    const auto& list = top.array("episodes");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      FieldReader r(list[i], indexed("episodes", i));
      r.only({"name", "tasks", "robots"});
      Episode ep;
      ep.name = r.string("name");
      if (!names.insert(ep.name).second) throw ParseError(r.join("name"), "duplicate episode name");
      const auto& ids = r.array("tasks");
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (!ids[k].is_string()) throw ParseError(indexed(r.join("tasks"), k), "expected a task id string");
        const auto id = ids[k].get<std::string>();
        if (!task_ids.count(id)) throw ParseError(indexed(r.join("tasks"), k), "unknown task id '" + id + "'");
        ep.task_ids.push_back(id);
      }
      if (r.has("robots")) {
        ep.robots = detail::read_robots(r.at("robots"), r.join("robots"), n_stations);
        max_roster = std::max(max_roster, ep.robots->size());
      }
      out.episodes.push_back(std::move(ep));
    }
  }

  for (std::size_t i = 0; i < out.tasks.size(); ++i) {
    const Task& t = out.tasks[i];
    if (const auto* table = std::get_if<TableValue>(&t.value)) {
      for (const auto& [key, _] : table->entries)
        if (static_cast<int>(key.size()) != t.window_length())
          throw ParseError(indexed("tasks", i) + ".value.entries", "counter length does not match the task window");
      try {
        if (!validate_monotonicity(t.value, t.window_length(), static_cast<int>(max_roster), kMonotonicityBudget))
          throw ParseError(indexed("tasks", i) + ".value", "value table is not monotone in the counter");
      } catch (const DomainError& e) {
        throw ParseError(indexed("tasks", i) + ".value", e.what());
      } catch (const BudgetExceeded& e) {
        throw ParseError(indexed("tasks", i) + ".value", std::string("monotonicity gate: ") + e.what());
      }
    }
  }

  if (top.has("learning")) {
    FieldReader r(top.at("learning"), "learning");
    r.only({"algorithm", "epsilon", "rounds", "runs", "seed"});
    LearningDefaults d;
    if (r.has("algorithm")) {
      const auto a = r.string("algorithm");
      if (a == "br") d.algorithm = Algorithm::best_response;
      else if (a == "lll") d.algorithm = Algorithm::log_linear;
      else throw ParseError(r.join("algorithm"), "expected 'br' or 'lll'");
    }
    if (r.has("epsilon")) {
      d.epsilon = r.number("epsilon");
      if (!(d.epsilon > 0.0)) throw ParseError(r.join("epsilon"), "must be positive");
    }
    if (r.has("rounds")) {
      d.rounds = r.unsigned_integer("rounds");
      if (d.rounds < 1) throw ParseError(r.join("rounds"), "must be at least 1");
    }
    if (r.has("runs")) {
      d.runs = r.unsigned_integer("runs");
      if (d.runs < 1) throw ParseError(r.join("runs"), "must be at least 1");
    }
    if (r.has("seed")) d.seed = r.unsigned_integer("seed");
    out.learning = d;
  }
  return out;
}

// Canonical JSON text; parse_scenario(serialize_scenario(s)) == s.
inline std::string serialize_scenario(const ScenarioFile& s) {
  detail::json root;
  if (!s.name.empty()) root["name"] = s.name;
  detail::json env;
  env["width"] = s.environment.width;
  env["height"] = s.environment.height;
  env["obstacles"] = detail::json::array();
  for (const Cell& c : s.environment.obstacles) env["obstacles"].push_back(detail::write_cell(c));
  env["stations"] = detail::json::array();
  for (const Cell& c : s.environment.stations) env["stations"].push_back(detail::write_cell(c));
  root["environment"] = env;
  root["horizon"] = s.horizon;
  root["robots"] = detail::write_robots(s.robots);
  root["tasks"] = detail::json::array();
  for (const Task& t : s.tasks) {
    detail::json jt;
    jt["id"] = t.id;
    jt["location"] = detail::write_cell(t.location);
    jt["arrival"] = t.arrival;
    jt["departure"] = t.departure;
    jt["value"] = detail::write_value(t.value);
    root["tasks"].push_back(jt);
  }
  if (!s.episodes.empty()) {
    root["episodes"] = detail::json::array();
    for (const Episode& e : s.episodes) {
      detail::json je;
      je["name"] = e.name;
      je["tasks"] = e.task_ids;
      if (e.robots) je["robots"] = detail::write_robots(*e.robots);
      root["episodes"].push_back(je);
    }
  }
  if (s.learning) {
    const auto& d = *s.learning;
    root["learning"] = {{"algorithm", to_string(d.algorithm)},
                        {"epsilon", d.epsilon},
                        {"rounds", d.rounds},
                        {"runs", d.runs},
                        {"seed", d.seed}};
  }
  return root.dump(2) + "\n";
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.field(), path + ": " + (e.field().empty() ? std::string(e.what()) : std::string(e.what()).substr(e.field().size() + 2)));
  }
}

// FNV-1a over the canonical serialization.
inline std::string scenario_digest(const ScenarioFile& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_scenario(s)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 0xF];
  return out;
}

inline const Episode& find_episode(const ScenarioFile& s, const std::string& name) {
  for (const Episode& e : s.episodes)
    if (e.name == name) return e;
  // numeric selection, 1-based
  try {
    std::size_t pos = 0;
    const unsigned long k = std::stoul(name, &pos);
    if (pos == name.size() && k >= 1 && k <= s.episodes.size()) return s.episodes[k - 1];
  } catch (const std::exception&) {
  }
  throw DomainError("scenario has no episode '" + name + "'");
}

// Tasks and robots of the selected episode (or of the whole file when it has
// no episodes).
inline std::pair<std::vector<Robot>, std::vector<Task>> scenario_selection(const ScenarioFile& s,
                                                                          const std::optional<std::string>& episode) {
  if (s.episodes.empty()) {
    if (episode) throw DomainError("scenario defines no episodes");
    return {s.robots, s.tasks};
  }
  if (!episode) throw DomainError("scenario defines episodes; select one");
  const Episode& e = find_episode(s, *episode);
  std::vector<Task> tasks;
  for (const auto& id : e.task_ids)
    for (const Task& t : s.tasks)
      if (t.id == id) tasks.push_back(t);
  return {e.robots ? *e.robots : s.robots, tasks};
}

// Unsigned budget from the environment, or `fallback` when unset.
inline std::uint64_t env_budget(const char* name, std::uint64_t fallback) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return fallback;
  std::uint64_t v = 0;
  std::size_t pos = 0;
  try {
    v = std::stoull(raw, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || raw[pos] != '\0' || raw[0] == '-') throw DomainError(std::string(name) + " must be a non-negative integer");
  return v;
}

// Action-design budgets with DTE_SEARCH_BUDGET / DTE_EXTENDED_BUDGET overrides.
inline GameOptions game_options_from_env() {
  GameOptions o;
  o.budget.max_search_states = env_budget("DTE_SEARCH_BUDGET", o.budget.max_search_states);
  o.budget.max_extended_actions = env_budget("DTE_EXTENDED_BUDGET", o.budget.max_extended_actions);
  return o;
}

inline GameInstance make_game(const ScenarioFile& s, const std::optional<std::string>& episode = std::nullopt,
                              const GameOptions& options = {}) {
  auto [robots, tasks] = scenario_selection(s, episode);
  return GameInstance(s.environment.grid(), s.horizon, std::move(robots), std::move(tasks), options);
}

}  // namespace dte
