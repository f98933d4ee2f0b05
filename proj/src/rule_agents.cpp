#include "wese/rule_agents.hpp"

#include <algorithm>
#include <deque>

#include "wese/kg.hpp"
#include "wese/text.hpp"

namespace wese::rule {

namespace {

// Prompt-role markers; these match the shipped templates.
constexpr const char* kExtractMarker = "Extract knowledge triplets";
constexpr const char* kEntitiesMarker = "entities involved in the task";

std::vector<std::string> parse_item_list(std::string list) {
  std::vector<std::string> out;
  list = trim(list);
  if (list == "nothing" || list.empty()) return out;
  // "a x", "a x and a y", "a x, a y, and a z"
  size_t pos;
  while ((pos = list.find(" and ")) != std::string::npos) list.replace(pos, 5, ", ");
  for (auto& part : split(list, ',')) {
    std::string item = trim(part);
    if (item.rfind("a ", 0) == 0) item = trim(item.substr(2));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> sentences_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    cur.push_back(c);
    if (c == '.') {
      std::string t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    }
  }
  std::string t = trim(cur);
  if (!t.empty()) out.push_back(t);
  return out;
}

std::optional<std::string> after_prefix(const std::string& s, const char* prefix) {
  std::string p(prefix);
  if (s.rfind(p, 0) == 0) return s.substr(p.size());
  return std::nullopt;
}

std::string strip_dot(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

std::string last_observation(const std::string& prompt) {
  size_t pos = prompt.rfind("Observation: ");
  if (pos == std::string::npos) return "";
  std::string rest = prompt.substr(pos + 13);
  size_t nl = rest.find('\n');
  return nl == std::string::npos ? rest : rest.substr(0, nl);
}

std::string task_from_prompt(const std::string& prompt) {
  size_t pos = prompt.rfind("Task: ");
  if (pos == std::string::npos) return "";
  std::string rest = prompt.substr(pos + 6);
  size_t nl = rest.find('\n');
  return nl == std::string::npos ? rest : rest.substr(0, nl);
}

llm::CompletionResult make_result(const std::string& prompt, std::string text) {
  llm::CompletionResult r;
  r.usage.prompt_tokens = llm::estimate_tokens(prompt);
  r.usage.completion_tokens = llm::estimate_tokens(text);
  r.text = std::move(text);
  return r;
}

bool ends_with_digit(const std::string& s) {
  return !s.empty() && std::isdigit(static_cast<unsigned char>(s.back())) != 0;
}

}  // namespace

RoomObservation parse_room_observation(const std::string& feedback) {
  RoomObservation obs;
  for (const auto& sentence : sentences_of(feedback)) {
    if (auto rest = after_prefix(sentence, "You are in the ")) {
      obs.room = strip_dot(*rest);
    } else if (auto rest2 = after_prefix(sentence, "You go to the ")) {
      // Arrival confirmations repeat the room in "You are in the ...".
    } else if (auto rest3 = after_prefix(sentence, "You see ")) {
      obs.receptacles = parse_item_list(strip_dot(*rest3));
    } else if (auto rest4 = after_prefix(sentence, "The ")) {
      std::string body = strip_dot(*rest4);
      constexpr std::string_view closed_suffix = " is closed";
      if (body.size() > closed_suffix.size() &&
          body.compare(body.size() - closed_suffix.size(), closed_suffix.size(), closed_suffix) == 0) {
        obs.closed.push_back(body.substr(0, body.size() - closed_suffix.size()));
      }
    } else if (auto rest5 = after_prefix(sentence, "In the ")) {
      size_t comma = rest5->find(", you see ");
      if (comma != std::string::npos) {
        obs.contents.emplace_back(rest5->substr(0, comma),
                                  parse_item_list(strip_dot(rest5->substr(comma + 10))));
      }
    } else if (auto rest6 = after_prefix(sentence, "On the ")) {
      size_t comma = rest6->find(", you see ");
      if (comma != std::string::npos) {
        obs.contents.emplace_back(rest6->substr(0, comma),
                                  parse_item_list(strip_dot(rest6->substr(comma + 10))));
      }
    } else if (auto rest7 = after_prefix(sentence, "Exits lead to: ")) {
      for (auto& e : split(strip_dot(*rest7), ',')) obs.exits.push_back(trim(e));
    } else if (auto rest8 = after_prefix(sentence, "You open the ")) {
      obs.opened = strip_dot(*rest8);
    } else if (auto rest9 = after_prefix(sentence, "You take the ")) {
      size_t from = rest9->find(" from the ");
      if (from != std::string::npos) obs.took = rest9->substr(0, from);
    }
  }
  return obs;
}

std::string extract_triplet_lines(const std::string& feedback) {
  RoomObservation obs = parse_room_observation(feedback);
  std::vector<std::string> lines;
  auto emit = [&](const std::string& h, const std::string& r, const std::string& t) {
    lines.push_back("(" + h + " | " + r + " | " + t + ")");
  };
  if (obs.room) {
    for (const auto& r : obs.receptacles) emit(r, "is in", *obs.room);
    for (const auto& e : obs.exits) emit(*obs.room, "leads to", e);
  }
  for (const auto& [recep, objects] : obs.contents) {
    bool surface = feedback.find("On the " + recep) != std::string::npos;
    for (const auto& obj : objects) {
      emit(obj, surface ? "is on" : "is in", recep);
      if (obs.room) emit(obj, "located in", *obs.room);
    }
  }
  if (lines.empty()) return "NONE";
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::optional<ParsedHouseholdTask> parse_household_task(const std::string& description) {
  std::string d = trim(description);
  ParsedHouseholdTask task;
  std::string rest;
  if (auto r = after_prefix(d, "put ")) {
    task.verb = "put";
    rest = *r;
  } else if (auto r2 = after_prefix(d, "clean some ")) {
    task.verb = "clean";
    rest = *r2;
  } else if (auto r3 = after_prefix(d, "heat some ")) {
    task.verb = "heat";
    rest = *r3;
  } else {
    return std::nullopt;
  }
  if (task.verb != "put") {
    size_t andpos = rest.find(" and put it ");
    if (andpos == std::string::npos) return std::nullopt;
    task.object = rest.substr(0, andpos);
    rest = rest.substr(andpos + 12);
    if (auto r = after_prefix(rest, "in ")) {
      task.target = strip_dot(*r);
    } else if (auto r2 = after_prefix(rest, "on ")) {
      task.target = strip_dot(*r2);
    } else {
      return std::nullopt;
    }
    return task;
  }
  // "put <obj> in|on <target>": split on the last " in " / " on ".
  size_t inpos = rest.rfind(" in ");
  size_t onpos = rest.rfind(" on ");
  size_t pos = std::string::npos;
  size_t skip = 4;
  if (inpos != std::string::npos && (onpos == std::string::npos || inpos > onpos)) {
    pos = inpos;
  } else if (onpos != std::string::npos) {
    pos = onpos;
  }
  if (pos == std::string::npos) return std::nullopt;
  task.object = rest.substr(0, pos);
  task.target = strip_dot(rest.substr(pos + skip));
  return task;
}

// ── Shared navigation helpers ───────────────────────────────────

namespace {

struct MapView {
  const std::map<std::string, std::vector<std::string>>& exits;
  const std::set<std::string>& visited;
};

/// First hop of a BFS path over visited rooms (plus one frontier hop).
std::optional<std::string> first_hop(const MapView& map, const std::string& from,
                                     const std::string& to) {
  if (from == to) return std::nullopt;
  std::map<std::string, std::string> parent;
  std::deque<std::string> frontier{from};
  parent[from] = from;
  while (!frontier.empty()) {
    std::string cur = frontier.front();
    frontier.pop_front();
    auto it = map.exits.find(cur);
    if (it == map.exits.end()) continue;
    for (const auto& next : it->second) {
      if (parent.contains(next)) continue;
      parent[next] = cur;
      if (next == to) {
        std::string walk = to;
        while (parent[walk] != from) walk = parent[walk];
        return walk;
      }
      // Only visited rooms have known exits; unvisited ones are dead ends.
      if (map.visited.contains(next)) frontier.push_back(next);
    }
  }
  return std::nullopt;
}

std::optional<std::string> first_unvisited(const std::vector<std::string>& discovered,
                                           const std::set<std::string>& visited) {
  for (const auto& room : discovered) {
    if (!visited.contains(room)) return room;
  }
  return std::nullopt;
}

void ingest_map(const RoomObservation& obs, std::map<std::string, std::vector<std::string>>& exits,
                std::vector<std::string>& discovered, std::set<std::string>& visited,
                std::string& current_room) {
  if (!obs.room) return;
  current_room = *obs.room;
  if (std::find(discovered.begin(), discovered.end(), current_room) == discovered.end()) {
    discovered.push_back(current_room);
  }
  visited.insert(current_room);
  if (!obs.exits.empty()) exits[current_room] = obs.exits;
  for (const auto& e : obs.exits) {
    if (std::find(discovered.begin(), discovered.end(), e) == discovered.end()) discovered.push_back(e);
  }
}

}  // namespace

// ── Weak agent (explorer + extractor + entity picker) ──────────

llm::CompletionResult HouseholdWeakAgent::complete(const llm::CompletionRequest& request) {
  const std::string& prompt = request.prompt;
  if (prompt.find(kExtractMarker) != std::string::npos) {
    return make_result(prompt, extract_triplet_lines(last_observation(prompt)));
  }
  if (prompt.find(kEntitiesMarker) != std::string::npos) {
    std::string task = task_from_prompt(prompt);
    std::string lowered_task = to_lower(task);
    std::string picked;
    size_t pos = prompt.rfind("Known entities: ");
    if (pos != std::string::npos) {
      std::string rest = prompt.substr(pos + 16);
      size_t nl = rest.find('\n');
      if (nl != std::string::npos) rest = rest.substr(0, nl);
      for (const auto& raw : split(rest, ',')) {
        std::string entity = trim(raw);
        if (!entity.empty() && lowered_task.find(to_lower(entity)) != std::string::npos) {
          if (!picked.empty()) picked += ", ";
          picked += entity;
        }
      }
    }
    return make_result(prompt, picked.empty() ? "none" : picked);
  }
  return make_result(prompt, explore_action(prompt));
}

std::string HouseholdWeakAgent::explore_action(const std::string& prompt) {
  RoomObservation obs = parse_room_observation(last_observation(prompt));
  ingest_map(obs, known_exits_, discovered_, visited_, current_room_);

  if (obs.room) {
    pending_opens_.clear();
    for (const auto& r : obs.closed) pending_opens_.push_back(r);
    needs_relook_ = false;
  }
  if (obs.opened) {
    std::erase(pending_opens_, *obs.opened);
    needs_relook_ = true;
  }

  if (!pending_opens_.empty()) return "open " + pending_opens_.front();
  if (needs_relook_) {
    needs_relook_ = false;
    return "look around";
  }
  if (current_room_.empty()) return "look around";

  if (auto target = first_unvisited(discovered_, visited_)) {
    auto hop = first_hop(MapView{known_exits_, visited_}, current_room_, *target);
    if (hop) return "go to " + *hop;
  }
  return "DONE_EXPLORING";
}

// ── Planner (knowledge-guided exploitation) ─────────────────────

llm::CompletionResult HouseholdPlannerAgent::complete(const llm::CompletionRequest& request) {
  return make_result(request.prompt, act(request.prompt));
}

std::string HouseholdPlannerAgent::navigate_towards(const std::string& target_room) {
  auto hop = first_hop(MapView{known_exits_, visited_}, current_room_, target_room);
  if (hop) return "go to " + *hop;
  return explore_step();
}

std::string HouseholdPlannerAgent::explore_step() {
  if (auto target = first_unvisited(discovered_, visited_)) {
    auto hop = first_hop(MapView{known_exits_, visited_}, current_room_, *target);
    if (hop) return "go to " + *hop;
  }
  return "look around";
}

std::string HouseholdPlannerAgent::act(const std::string& prompt) {
  if (!initialized_) {
    initialized_ = true;
    if (auto parsed = parse_household_task(task_from_prompt(prompt))) task_ = *parsed;
    // Mine the injected knowledge block (the last one; earlier ones belong
    // to few-shot examples) for the object and target locations.
    size_t pos = prompt.rfind("Known facts:");
    if (pos != std::string::npos) {
      std::string rest = prompt.substr(pos);
      size_t end = rest.find("\n\n");
      auto parsed = kg::parse_triplets(end == std::string::npos ? rest : rest.substr(0, end));
      for (const auto& t : parsed.triplets) {
        if (t.head.name == task_.object) {
          if (t.relation == "is in" || t.relation == "is on") object_receptacle_ = t.tail.name;
          if (t.relation == "located in") object_room_ = t.tail.name;
        }
        if (t.head.name == task_.target && t.relation == "is in" && !ends_with_digit(t.tail.name)) {
          target_room_ = t.tail.name;
        }
      }
    }
  }

  std::string latest = last_observation(prompt);
  RoomObservation obs = parse_room_observation(latest);
  ingest_map(obs, known_exits_, discovered_, visited_, current_room_);
  if (obs.room) {
    for (const auto& r : obs.receptacles) {
      seen_receptacle_rooms_[r] = *obs.room;
      known_closed_[r] = false;
    }
    for (const auto& c : obs.closed) known_closed_[c] = true;
  }
  if (obs.opened) known_closed_[*obs.opened] = false;
  if (obs.took) holding_ = true;
  if (latest.rfind("You clean the ", 0) == 0 || latest.rfind("You heat the ", 0) == 0) {
    transformed_ = true;
  }
  // Opportunistic sighting covers gaps in the injected knowledge.
  for (const auto& [recep, objects] : obs.contents) {
    for (const auto& o : objects) {
      if (o == task_.object && !holding_) {
        object_receptacle_ = recep;
        auto room_it = seen_receptacle_rooms_.find(recep);
        if (room_it != seen_receptacle_rooms_.end()) object_room_ = room_it->second;
      }
    }
  }
  if (current_room_.empty()) return "look around";

  // Fetch.
  if (!holding_) {
    if (object_room_ && current_room_ != *object_room_) return navigate_towards(*object_room_);
    if (object_receptacle_) {
      auto seen = seen_receptacle_rooms_.find(*object_receptacle_);
      if (seen != seen_receptacle_rooms_.end() && seen->second == current_room_) {
        if (known_closed_[*object_receptacle_]) return "open " + *object_receptacle_;
        return "take " + task_.object + " from " + *object_receptacle_;
      }
      if (seen != seen_receptacle_rooms_.end()) return navigate_towards(seen->second);
    }
    return explore_step();  // knowledge gap: fall back to sweeping
  }

  // Transform (clean / heat) before delivery.
  if ((task_.verb == "clean" || task_.verb == "heat") && !transformed_) {
    const char* wanted = task_.verb == "clean" ? "sinkbasin" : "microwave";
    for (const auto& [recep, room] : seen_receptacle_rooms_) {
      if (recep.rfind(wanted, 0) == 0) {
        if (room == current_room_) {
          return task_.verb + " " + task_.object + " with " + recep;
        }
        return navigate_towards(room);
      }
    }
    return explore_step();
  }

  // Deliver.
  auto seen = seen_receptacle_rooms_.find(task_.target);
  if (seen != seen_receptacle_rooms_.end() && seen->second == current_room_) {
    if (known_closed_[task_.target]) return "open " + task_.target;
    std::string prep = task_.target.find("countertop") == 0 || task_.target.find("shelf") == 0 ||
                               task_.target.find("table") == 0
                           ? "on"
                           : "in";
    return "put " + task_.object + " " + prep + " " + task_.target;
  }
  if (seen != seen_receptacle_rooms_.end()) return navigate_towards(seen->second);
  if (target_room_) return navigate_towards(*target_room_);
  return explore_step();
}

// ── Coupled baseline (blind interleaved search) ─────────────────

llm::CompletionResult HouseholdCoupledAgent::complete(const llm::CompletionRequest& request) {
  return make_result(request.prompt, act(request.prompt));
}

std::string HouseholdCoupledAgent::navigate_towards(const std::string& target_room) {
  auto hop = first_hop(MapView{known_exits_, visited_}, current_room_, target_room);
  if (hop) return "go to " + *hop;
  return explore_step();
}

std::string HouseholdCoupledAgent::explore_step() {
  if (auto target = first_unvisited(discovered_, visited_)) {
    auto hop = first_hop(MapView{known_exits_, visited_}, current_room_, *target);
    if (hop) return "go to " + *hop;
  }
  return "look around";
}

std::string HouseholdCoupledAgent::act(const std::string& prompt) {
  if (!initialized_) {
    initialized_ = true;
    if (auto parsed = parse_household_task(task_from_prompt(prompt))) task_ = *parsed;
  }

  std::string latest = last_observation(prompt);
  RoomObservation obs = parse_room_observation(latest);
  ingest_map(obs, known_exits_, discovered_, visited_, current_room_);
  if (obs.room) {
    pending_opens_.clear();
    for (const auto& c : obs.closed) {
      if (!receptacle_checked_[c]) pending_opens_.push_back(c);
    }
    for (const auto& r : obs.receptacles) {
      seen_receptacle_rooms_[r] = *obs.room;
      known_closed_[r] = false;
    }
    for (const auto& c : obs.closed) known_closed_[c] = true;
    for (const auto& [recep, objects] : obs.contents) receptacle_checked_[recep] = true;
  }
  if (obs.opened) {
    receptacle_checked_[*obs.opened] = true;
    known_closed_[*obs.opened] = false;
    std::erase(pending_opens_, *obs.opened);
  }
  for (const auto& [recep, objects] : obs.contents) {
    for (const auto& o : objects) {
      if (o == task_.object) {
        object_receptacle_ = recep;
        auto room_it = seen_receptacle_rooms_.find(recep);
        object_room_ = room_it != seen_receptacle_rooms_.end() ? room_it->second : current_room_;
      }
    }
  }
  if (obs.took) holding_ = true;
  if (latest.rfind("You clean the ", 0) == 0 || latest.rfind("You heat the ", 0) == 0) {
    transformed_ = true;
  }
  if (current_room_.empty()) return "look around";

  if (!holding_) {
    if (object_receptacle_) {
      if (object_room_ && current_room_ != *object_room_) return navigate_towards(*object_room_);
      return "take " + task_.object + " from " + *object_receptacle_;
    }
    // Blind hunt: open everything closed here, then move on.
    if (!pending_opens_.empty()) return "open " + pending_opens_.front();
    return explore_step();
  }

  if ((task_.verb == "clean" || task_.verb == "heat") && !transformed_) {
    const char* wanted = task_.verb == "clean" ? "sinkbasin" : "microwave";
    for (const auto& [recep, room] : seen_receptacle_rooms_) {
      if (recep.rfind(wanted, 0) == 0) {
        if (room == current_room_) return task_.verb + " " + task_.object + " with " + recep;
        return navigate_towards(room);
      }
    }
    return explore_step();
  }

  auto seen = seen_receptacle_rooms_.find(task_.target);
  if (seen != seen_receptacle_rooms_.end() && seen->second == current_room_) {
    if (known_closed_[task_.target]) return "open " + task_.target;
    std::string prep = task_.target.find("countertop") == 0 || task_.target.find("shelf") == 0 ||
                               task_.target.find("table") == 0
                           ? "on"
                           : "in";
    return "put " + task_.object + " " + prep + " " + task_.target;
  }
  if (seen != seen_receptacle_rooms_.end()) return navigate_towards(seen->second);
  return explore_step();
}

}  // namespace wese::rule
