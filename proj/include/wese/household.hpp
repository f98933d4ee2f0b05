#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "wese/env.hpp"

namespace wese::env::household {

inline constexpr const char* kInventory = "inventory";

struct Receptacle {
  std::string name;  // e.g. "drawer 1"
  std::string room;
  bool openable = false;
  bool surface = false;  // "on" vs "in" preposition
};

enum class TaskTemplate { Put, Clean, Heat };
enum class RewardStyle { Binary, Milestone };

std::string template_name(TaskTemplate t);
std::optional<TaskTemplate> template_from(const std::string& name);

struct HouseholdTask {
  std::string id;
  std::string description;
  TaskTemplate tmpl = TaskTemplate::Put;
  RewardStyle reward_style = RewardStyle::Binary;
  std::string object;
  std::string target;       // receptacle
  std::string agent_start;  // room
  std::map<std::string, std::string> placement;  // object -> receptacle or "inventory"
  std::vector<std::string> witness;
};

struct World {
  int format_version = 1;
  uint64_t seed = 0;
  std::vector<std::string> rooms;
  std::map<std::string, std::vector<std::string>> exits;  // directed room graph
  std::vector<Receptacle> receptacles;
  std::vector<std::string> objects;
  std::vector<HouseholdTask> tasks;

  const Receptacle* find_receptacle(const std::string& name) const;
  const HouseholdTask* find_task(const std::string& id) const;
};

/// Deterministic world + solvable tasks. Every task carries a witness action
/// sequence generated alongside it.
World generate_world(uint64_t seed, int task_count, int room_count = 6);

/// Shortest-path witness for a task in a world: walk, open, take, transform,
/// deliver.
std::vector<std::string> make_witness(const World& world, const HouseholdTask& task);

struct State {
  const World* world = nullptr;
  const HouseholdTask* task = nullptr;
  std::string agent_room;
  std::optional<std::string> inventory;
  std::map<std::string, std::string> placement;  // object -> receptacle ("" while held)
  std::set<std::string> open_receptacles;
  std::set<std::string> clean_objects;
  std::set<std::string> hot_objects;
  std::set<std::string> milestones;
  double cumulative_reward = 0.0;
  bool done = false;

  uint64_t fingerprint() const;
};

std::pair<State, Feedback> reset(const World& world, const HouseholdTask& task);

/// Pure transition: equal (state, action) inputs give equal outputs. Illegal
/// or malformed actions return "Nothing happens." and leave the state
/// unchanged. Throws UsageError when the state is already done.
std::pair<State, Feedback> step(const State& state, const std::string& action);

struct ParsedAction {
  enum Kind { GoTo, Open, Take, Put, Clean, Heat, LookAround, Examine, Invalid } kind = Invalid;
  std::string arg1;
  std::string arg2;
};
ParsedAction parse_action(const std::string& action);

bool explore_legal(const std::string& action);  // go to / open / look around / examine
bool exploit_legal(const std::string& action);  // full grammar

/// True iff the task's goal predicate holds in the state; evaluated
/// independently of the step engine's bookkeeping (oracle use).
bool goal_satisfied(const State& state);

std::string observation(const State& state);

class HouseholdEpisode : public Episode {
 public:
  HouseholdEpisode(const World& world, const HouseholdTask& task, Task descriptor);

  Feedback reset() override;
  Feedback step(const std::string& action) override;
  bool done() const override { return state_.done; }
  double cumulative_reward() const override { return state_.cumulative_reward; }
  double goal_reward() const override {
    return household_task_.reward_style == RewardStyle::Milestone ? 100.0 : 1.0;
  }
  uint64_t state_fingerprint() const override { return state_.fingerprint(); }
  bool well_formed(const std::string& action) const override;
  bool explore_legal(const std::string& action) const override;
  bool exploit_legal(const std::string& action) const override;
  std::string fallback_explore_action() const override { return "look around"; }
  std::string fallback_exploit_action() const override { return "look around"; }
  const Task& task() const override { return descriptor_; }
  std::string kind() const override { return "household"; }

 private:
  const World& world_;
  const HouseholdTask& household_task_;
  Task descriptor_;
  State state_;
};

}  // namespace wese::env::household
