#include "wese/household.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <sstream>

#include "wese/errors.hpp"
#include "wese/log.hpp"
#include "wese/text.hpp"

namespace wese::env::household {

namespace {

const std::vector<std::string>& room_pool() {
  static const std::vector<std::string> pool = {"kitchen",  "hall",   "bedroom", "bathroom", "garage",
                                                "living room", "office", "pantry",  "laundry",  "study"};
  return pool;
}

struct ReceptacleType {
  const char* name;
  bool openable;
  bool surface;
};

const std::vector<ReceptacleType>& receptacle_types() {
  static const std::vector<ReceptacleType> types = {
      {"drawer", true, false},    {"cabinet", true, false}, {"fridge", true, false},
      {"microwave", true, false}, {"countertop", false, true}, {"shelf", false, true},
      {"table", false, true},     {"sinkbasin", false, false},
  };
  return types;
}

const std::vector<std::string>& object_pool() {
  static const std::vector<std::string> pool = {
      "apple", "knife", "soap", "mug",     "plate",  "egg",    "tomato", "bread",  "sponge", "fork",
      "spoon", "cup",   "pan",  "lettuce", "potato", "book",   "towel",  "candle", "bowl",   "keychain"};
  return pool;
}

// mt19937 output is standardized; std::uniform_int_distribution is not.
// Deterministic cross-platform generation uses plain modulo.
size_t pick(std::mt19937& rng, size_t n) { return n == 0 ? 0 : rng() % n; }

template <typename T>
void shuffle_vec(std::mt19937& rng, std::vector<T>& v) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[pick(rng, i)]);
  }
}

std::string list_with_articles(const std::vector<std::string>& names) {
  if (names.empty()) return "nothing";
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += names.size() == 2 ? " and " : (i + 1 == names.size() ? ", and " : ", ");
    out += "a " + names[i];
  }
  return out;
}

bool is_type(const std::string& receptacle_name, const char* type) {
  return receptacle_name.rfind(type, 0) == 0;
}

std::string preposition(const Receptacle& r) { return r.surface ? "on" : "in"; }

}  // namespace

std::string template_name(TaskTemplate t) {
  switch (t) {
    case TaskTemplate::Put: return "put";
    case TaskTemplate::Clean: return "clean";
    case TaskTemplate::Heat: return "heat";
  }
  return "?";
}

std::optional<TaskTemplate> template_from(const std::string& name) {
  if (name == "put") return TaskTemplate::Put;
  if (name == "clean") return TaskTemplate::Clean;
  if (name == "heat") return TaskTemplate::Heat;
  return std::nullopt;
}

const Receptacle* World::find_receptacle(const std::string& name) const {
  for (const auto& r : receptacles) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const HouseholdTask* World::find_task(const std::string& id) const {
  for (const auto& t : tasks) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

// ── Generation ──────────────────────────────────────────────────

namespace {

std::vector<std::string> bfs_path(const World& world, const std::string& from, const std::string& to) {
  if (from == to) return {};
  std::map<std::string, std::string> parent;
  std::deque<std::string> frontier{from};
  parent[from] = from;
  while (!frontier.empty()) {
    std::string cur = frontier.front();
    frontier.pop_front();
    auto it = world.exits.find(cur);
    if (it == world.exits.end()) continue;
    for (const auto& next : it->second) {
      if (parent.contains(next)) continue;
      parent[next] = cur;
      if (next == to) {
        std::vector<std::string> path{to};
        std::string walk = to;
        while (parent[walk] != walk) {
          walk = parent[walk];
          if (walk != from) path.push_back(walk);
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      frontier.push_back(next);
    }
  }
  throw ConfigError("room graph is not connected: no path " + from + " -> " + to);
}

/// Nearest receptacle of a type, by BFS hop count then declaration order.
const Receptacle* nearest_of_type(const World& world, const std::string& from_room, const char* type) {
  const Receptacle* best = nullptr;
  size_t best_dist = SIZE_MAX;
  for (const auto& r : world.receptacles) {
    if (!is_type(r.name, type)) continue;
    size_t d = bfs_path(world, from_room, r.room).size();
    if (d < best_dist) {
      best = &r;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace

std::vector<std::string> make_witness(const World& world, const HouseholdTask& task) {
  std::vector<std::string> steps;
  std::string room = task.agent_start;
  bool holding = task.placement.at(task.object) == kInventory;

  auto walk_to = [&](const std::string& dest) {
    for (const auto& hop : bfs_path(world, room, dest)) steps.push_back("go to " + hop);
    room = dest;
  };

  if (!holding) {
    const Receptacle* src = world.find_receptacle(task.placement.at(task.object));
    walk_to(src->room);
    if (src->openable) steps.push_back("open " + src->name);
    steps.push_back("take " + task.object + " from " + src->name);
  }
  if (task.tmpl == TaskTemplate::Clean) {
    const Receptacle* sink = nearest_of_type(world, room, "sinkbasin");
    walk_to(sink->room);
    steps.push_back("clean " + task.object + " with " + sink->name);
  } else if (task.tmpl == TaskTemplate::Heat) {
    const Receptacle* micro = nearest_of_type(world, room, "microwave");
    walk_to(micro->room);
    steps.push_back("heat " + task.object + " with " + micro->name);
  }
  const Receptacle* target = world.find_receptacle(task.target);
  walk_to(target->room);
  if (target->openable) steps.push_back("open " + target->name);
  steps.push_back("put " + task.object + " " + preposition(*target) + " " + target->name);
  return steps;
}

World generate_world(uint64_t seed, int task_count, int room_count) {
  if (task_count < 1) throw ConfigError("task_count must be >= 1");
  room_count = std::clamp(room_count, 3, static_cast<int>(room_pool().size()));
  std::mt19937 rng(static_cast<uint32_t>(seed ^ 0x9e3779b9u));

  World world;
  world.seed = seed;
  world.rooms.assign(room_pool().begin(), room_pool().begin() + room_count);

  // Bidirectional ring keeps the graph strongly connected; seeded chords make
  // it irregular without making every pair adjacent.
  for (int i = 0; i < room_count; ++i) {
    const auto& here = world.rooms[i];
    world.exits[here].push_back(world.rooms[(i + 1) % room_count]);
    world.exits[here].push_back(world.rooms[(i + room_count - 1) % room_count]);
  }
  for (int i = 0; i < room_count; ++i) {
    if (pick(rng, 3) == 0) {
      const auto& dest = world.rooms[pick(rng, world.rooms.size())];
      auto& out = world.exits[world.rooms[i]];
      if (dest != world.rooms[i] && std::find(out.begin(), out.end(), dest) == out.end()) {
        out.push_back(dest);
      }
    }
  }

  std::map<std::string, int> type_counts;
  auto add_receptacle = [&](const ReceptacleType& type, const std::string& room) {
    int n = ++type_counts[type.name];
    world.receptacles.push_back(
        Receptacle{std::string(type.name) + " " + std::to_string(n), room, type.openable, type.surface});
  };
  for (const auto& room : world.rooms) {
    size_t count = 2 + pick(rng, 2);
    for (size_t k = 0; k < count; ++k) {
      add_receptacle(receptacle_types()[pick(rng, receptacle_types().size())], room);
    }
  }
  // Clean and heat tasks need at least one sink and one microwave somewhere.
  if (type_counts["sinkbasin"] == 0) {
    add_receptacle(receptacle_types()[7], world.rooms[pick(rng, world.rooms.size())]);
  }
  if (type_counts["microwave"] == 0) {
    add_receptacle(receptacle_types()[3], world.rooms[pick(rng, world.rooms.size())]);
  }

  for (const auto& name : object_pool()) world.objects.push_back(name + " 1");

  for (int t = 0; t < task_count; ++t) {
    HouseholdTask task;
    task.id = "hh-" + std::to_string(t);
    task.tmpl = static_cast<TaskTemplate>(pick(rng, 3));
    task.reward_style = RewardStyle::Binary;
    task.object = world.objects[pick(rng, world.objects.size())];
    task.agent_start = world.rooms[pick(rng, world.rooms.size())];

    for (const auto& obj : world.objects) {
      task.placement[obj] = world.receptacles[pick(rng, world.receptacles.size())].name;
    }
    // Occasional degenerate start: the task object is already in hand.
    if (pick(rng, 8) == 0) task.placement[task.object] = kInventory;

    do {
      task.target = world.receptacles[pick(rng, world.receptacles.size())].name;
    } while (task.target == task.placement[task.object]);

    const Receptacle* target = world.find_receptacle(task.target);
    std::string prep = preposition(*target);
    switch (task.tmpl) {
      case TaskTemplate::Put:
        task.description = "put " + task.object + " " + prep + " " + task.target;
        break;
      case TaskTemplate::Clean:
        task.description = "clean some " + task.object + " and put it " + prep + " " + task.target;
        break;
      case TaskTemplate::Heat:
        task.description = "heat some " + task.object + " and put it " + prep + " " + task.target;
        break;
    }
    task.witness = make_witness(world, task);
    world.tasks.push_back(std::move(task));
  }
  return world;
}

// ── State and transitions ───────────────────────────────────────

uint64_t State::fingerprint() const {
  std::ostringstream os;
  os << agent_room << '\x1f' << inventory.value_or("-") << '\x1f' << cumulative_reward << '\x1f' << done;
  for (const auto& [obj, recep] : placement) os << '\x1f' << obj << '=' << recep;
  for (const auto& r : open_receptacles) os << '\x1f' << "open:" << r;
  for (const auto& o : clean_objects) os << '\x1f' << "clean:" << o;
  for (const auto& o : hot_objects) os << '\x1f' << "hot:" << o;
  for (const auto& m : milestones) os << '\x1f' << "ms:" << m;
  return fnv1a64(os.str());
}

namespace {

bool visible(const State& s, const Receptacle& r) {
  return !r.openable || s.open_receptacles.contains(r.name);
}

std::vector<std::string> contents(const State& s, const std::string& receptacle) {
  std::vector<std::string> out;
  for (const auto& obj : s.world->objects) {
    auto it = s.placement.find(obj);
    if (it != s.placement.end() && it->second == receptacle) out.push_back(obj);
  }
  return out;
}

}  // namespace

std::string observation(const State& s) {
  std::ostringstream os;
  os << "You are in the " << s.agent_room << ".";
  std::vector<std::string> here;
  for (const auto& r : s.world->receptacles) {
    if (r.room == s.agent_room) here.push_back(r.name);
  }
  os << " You see " << list_with_articles(here) << ".";
  for (const auto& name : here) {
    const Receptacle* r = s.world->find_receptacle(name);
    if (!visible(s, *r)) {
      os << " The " << name << " is closed.";
    } else {
      os << ' ' << (r->surface ? "On" : "In") << " the " << name << ", you see "
         << list_with_articles(contents(s, name)) << ".";
    }
  }
  if (s.inventory) os << " You are carrying the " << *s.inventory << ".";
  os << " Exits lead to: ";
  const auto& exits = s.world->exits.at(s.agent_room);
  for (size_t i = 0; i < exits.size(); ++i) os << (i ? ", " : "") << exits[i];
  os << ".";
  return os.str();
}

std::pair<State, Feedback> reset(const World& world, const HouseholdTask& task) {
  State s;
  s.world = &world;
  s.task = &task;
  s.agent_room = task.agent_start;
  for (const auto& [obj, recep] : task.placement) {
    if (recep == kInventory) {
      s.inventory = obj;
      s.placement[obj] = "";
    } else {
      s.placement[obj] = recep;
    }
  }
  Feedback fb;
  fb.text = "Your task is to: " + task.description + ". " + observation(s);
  return {std::move(s), std::move(fb)};
}

ParsedAction parse_action(const std::string& action) {
  std::string a = collapse_ws(to_lower(action));
  auto strip_prefix = [&](const char* prefix) -> std::optional<std::string> {
    std::string p(prefix);
    if (a.rfind(p, 0) == 0) return a.substr(p.size());
    return std::nullopt;
  };
  auto split_on = [](const std::string& s, const char* sep) -> std::optional<std::pair<std::string, std::string>> {
    size_t pos = s.find(sep);
    if (pos == std::string::npos) return std::nullopt;
    return std::make_pair(trim(s.substr(0, pos)), trim(s.substr(pos + std::string(sep).size())));
  };

  if (a == "look around" || a == "look") return {ParsedAction::LookAround, "", ""};
  if (auto rest = strip_prefix("go to ")) return {ParsedAction::GoTo, *rest, ""};
  if (auto rest = strip_prefix("open ")) return {ParsedAction::Open, *rest, ""};
  if (auto rest = strip_prefix("examine ")) return {ParsedAction::Examine, *rest, ""};
  if (auto rest = strip_prefix("take ")) {
    if (auto parts = split_on(*rest, " from ")) return {ParsedAction::Take, parts->first, parts->second};
    return {ParsedAction::Invalid, "", ""};
  }
  if (auto rest = strip_prefix("put ")) {
    if (auto parts = split_on(*rest, " in ")) return {ParsedAction::Put, parts->first, parts->second};
    if (auto parts = split_on(*rest, " on ")) return {ParsedAction::Put, parts->first, parts->second};
    return {ParsedAction::Invalid, "", ""};
  }
  if (auto rest = strip_prefix("clean ")) {
    if (auto parts = split_on(*rest, " with ")) return {ParsedAction::Clean, parts->first, parts->second};
    return {ParsedAction::Invalid, "", ""};
  }
  if (auto rest = strip_prefix("heat ")) {
    if (auto parts = split_on(*rest, " with ")) return {ParsedAction::Heat, parts->first, parts->second};
    return {ParsedAction::Invalid, "", ""};
  }
  return {ParsedAction::Invalid, "", ""};
}

bool explore_legal(const std::string& action) {
  switch (parse_action(action).kind) {
    case ParsedAction::GoTo:
    case ParsedAction::Open:
    case ParsedAction::LookAround:
    case ParsedAction::Examine:
      return true;
    default:
      return false;
  }
}

bool exploit_legal(const std::string& action) {
  return parse_action(action).kind != ParsedAction::Invalid;
}

bool goal_satisfied(const State& s) {
  const HouseholdTask& task = *s.task;
  auto it = s.placement.find(task.object);
  if (it == s.placement.end() || it->second != task.target) return false;
  if (task.tmpl == TaskTemplate::Clean && !s.clean_objects.contains(task.object)) return false;
  if (task.tmpl == TaskTemplate::Heat && !s.hot_objects.contains(task.object)) return false;
  return true;
}

namespace {

// Milestone schedule for ScienceWorld-style partial rewards: fixed values
// per crucial step, with the goal milestone topping the cumulative total up
// to exactly 100.
double milestone_value(TaskTemplate tmpl, const std::string& name) {
  if (tmpl == TaskTemplate::Put) return 50;
  return name == "take" ? 25 : 35;
}

void award(State& s, Feedback& fb, const std::string& milestone) {
  if (s.task->reward_style != RewardStyle::Milestone) return;
  if (s.milestones.contains(milestone)) return;
  s.milestones.insert(milestone);
  double value = milestone_value(s.task->tmpl, milestone);
  fb.reward += value;
  s.cumulative_reward += value;
}

void finish_if_goal(State& s, Feedback& fb) {
  if (!goal_satisfied(s)) return;
  s.done = true;
  if (s.task->reward_style == RewardStyle::Binary) {
    fb.reward += 1.0;
    s.cumulative_reward += 1.0;
  } else if (!s.milestones.contains("goal")) {
    s.milestones.insert("goal");
    double value = 100.0 - s.cumulative_reward;
    fb.reward += value;
    s.cumulative_reward += value;
  }
  fb.done = true;
  fb.text += " ";
  fb.text += kCompletedMarker;
}

}  // namespace

std::pair<State, Feedback> step(const State& state, const std::string& action) {
  if (state.done) throw UsageError("step on a finished episode");
  State s = state;
  Feedback fb;
  ParsedAction act = parse_action(action);
  const World& w = *s.world;

  auto nothing = [&]() {
    fb.text = kNothingHappens;
    return std::make_pair(state, fb);  // unchanged state
  };

  switch (act.kind) {
    case ParsedAction::LookAround:
      fb.text = observation(s);
      break;

    case ParsedAction::GoTo: {
      const auto& exits = w.exits.at(s.agent_room);
      if (std::find(exits.begin(), exits.end(), act.arg1) == exits.end()) return nothing();
      s.agent_room = act.arg1;
      fb.text = "You go to the " + act.arg1 + ". " + observation(s);
      break;
    }

    case ParsedAction::Open: {
      const Receptacle* r = w.find_receptacle(act.arg1);
      if (!r || r->room != s.agent_room || !r->openable || s.open_receptacles.contains(r->name)) {
        return nothing();
      }
      s.open_receptacles.insert(r->name);
      fb.text = "You open the " + r->name + ". In the " + r->name + ", you see " +
                list_with_articles(contents(s, r->name)) + ".";
      break;
    }

    case ParsedAction::Examine: {
      const Receptacle* r = w.find_receptacle(act.arg1);
      if (!r || r->room != s.agent_room) return nothing();
      if (!visible(s, *r)) {
        fb.text = "The " + r->name + " is closed.";
      } else {
        fb.text = std::string(r->surface ? "On" : "In") + " the " + r->name + ", you see " +
                  list_with_articles(contents(s, r->name)) + ".";
      }
      break;
    }

    case ParsedAction::Take: {
      const Receptacle* r = w.find_receptacle(act.arg2);
      if (!r || r->room != s.agent_room || !visible(s, *r) || s.inventory.has_value()) return nothing();
      auto it = s.placement.find(act.arg1);
      if (it == s.placement.end() || it->second != r->name) return nothing();
      s.inventory = act.arg1;
      it->second = "";
      fb.text = "You take the " + act.arg1 + " from the " + r->name + ".";
      if (act.arg1 == s.task->object) award(s, fb, "take");
      break;
    }

    case ParsedAction::Put: {
      const Receptacle* r = w.find_receptacle(act.arg2);
      if (!r || r->room != s.agent_room || !visible(s, *r)) return nothing();
      if (!s.inventory.has_value() || *s.inventory != act.arg1) return nothing();
      s.placement[act.arg1] = r->name;
      s.inventory.reset();
      fb.text = "You put the " + act.arg1 + " " + preposition(*r) + " the " + r->name + ".";
      finish_if_goal(s, fb);
      break;
    }

    case ParsedAction::Clean: {
      const Receptacle* r = w.find_receptacle(act.arg2);
      if (!r || r->room != s.agent_room || !is_type(r->name, "sinkbasin")) return nothing();
      if (!s.inventory.has_value() || *s.inventory != act.arg1) return nothing();
      s.clean_objects.insert(act.arg1);
      fb.text = "You clean the " + act.arg1 + " with the " + r->name + ".";
      if (act.arg1 == s.task->object && s.task->tmpl == TaskTemplate::Clean) award(s, fb, "transform");
      break;
    }

    case ParsedAction::Heat: {
      const Receptacle* r = w.find_receptacle(act.arg2);
      if (!r || r->room != s.agent_room || !is_type(r->name, "microwave")) return nothing();
      if (!s.inventory.has_value() || *s.inventory != act.arg1) return nothing();
      s.hot_objects.insert(act.arg1);
      fb.text = "You heat the " + act.arg1 + " with the " + r->name + ".";
      if (act.arg1 == s.task->object && s.task->tmpl == TaskTemplate::Heat) award(s, fb, "transform");
      break;
    }

    case ParsedAction::Invalid:
      return nothing();
  }
  return {std::move(s), std::move(fb)};
}

// ── Episode adapter ─────────────────────────────────────────────

HouseholdEpisode::HouseholdEpisode(const World& world, const HouseholdTask& task, Task descriptor)
    : world_(world), household_task_(task), descriptor_(std::move(descriptor)) {
  reset();
}

Feedback HouseholdEpisode::reset() {
  auto [state, fb] = household::reset(world_, household_task_);
  state_ = std::move(state);
  return fb;
}

Feedback HouseholdEpisode::step(const std::string& action) {
  auto [state, fb] = household::step(state_, action);
  state_ = std::move(state);
  return fb;
}

bool HouseholdEpisode::well_formed(const std::string& action) const {
  return parse_action(action).kind != ParsedAction::Invalid;
}

bool HouseholdEpisode::explore_legal(const std::string& action) const {
  return household::explore_legal(action);
}

bool HouseholdEpisode::exploit_legal(const std::string& action) const {
  return household::exploit_legal(action);
}

}  // namespace wese::env::household
