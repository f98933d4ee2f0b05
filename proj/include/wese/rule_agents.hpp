#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wese/llm.hpp"

namespace wese::rule {

/// Parsed view of a household observation sentence group.
struct RoomObservation {
  std::optional<std::string> room;
  std::vector<std::string> receptacles;
  std::vector<std::string> closed;
  std::vector<std::pair<std::string, std::vector<std::string>>> contents;  // receptacle -> objects
  std::vector<std::string> exits;
  std::optional<std::string> opened;  // "You open the X."
  std::optional<std::string> took;    // "You take the O from the X."
};

RoomObservation parse_room_observation(const std::string& feedback);

/// Rule-based triplet extraction over household feedback text; the offline
/// stand-in for an LLM extractor. Returns `(head | relation | tail)` lines,
/// or "NONE".
std::string extract_triplet_lines(const std::string& feedback);

struct ParsedHouseholdTask {
  std::string verb;  // put | clean | heat
  std::string object;
  std::string target;
};
std::optional<ParsedHouseholdTask> parse_household_task(const std::string& description);

/// Deterministic weak-agent stand-in for household WESE runs. One instance
/// serves one episode; it dispatches on the prompt it receives:
/// exploration prompts drive a systematic room sweep that opens every closed
/// receptacle, extraction prompts run the rule extractor, entity prompts
/// pick graph entities mentioned by the task.
class HouseholdWeakAgent : public llm::CompletionBackend {
 public:
  llm::CompletionResult complete(const llm::CompletionRequest& request) override;
  std::string kind() const override { return "rule-weak"; }

 private:
  std::string explore_action(const std::string& prompt);

  // Map knowledge accumulated across turns.
  std::map<std::string, std::vector<std::string>> known_exits_;
  std::vector<std::string> discovered_;  // discovery order
  std::set<std::string> visited_;
  std::string current_room_;
  std::vector<std::string> pending_opens_;
  bool needs_relook_ = false;
};

/// Deterministic strong-agent stand-in for household exploitation. Reads the
/// injected knowledge block to locate the task object and target, then walks
/// a direct fetch / transform / deliver plan, discovering the room map as it
/// moves. No speculative receptacle opening.
class HouseholdPlannerAgent : public llm::CompletionBackend {
 public:
  llm::CompletionResult complete(const llm::CompletionRequest& request) override;
  std::string kind() const override { return "rule-planner"; }

 private:
  std::string act(const std::string& prompt);
  std::string navigate_towards(const std::string& target_room);
  std::string explore_step();

  bool initialized_ = false;
  ParsedHouseholdTask task_;
  std::optional<std::string> object_receptacle_;
  std::optional<std::string> object_room_;
  std::optional<std::string> target_room_;

  std::map<std::string, std::vector<std::string>> known_exits_;
  std::map<std::string, std::string> seen_receptacle_rooms_;  // receptacle -> room
  std::map<std::string, bool> known_closed_;                  // receptacle -> still closed
  std::vector<std::string> discovered_;
  std::set<std::string> visited_;
  std::string current_room_;
  bool holding_ = false;
  bool transformed_ = false;
};

/// Deterministic coupled-baseline stand-in: the same navigation skeleton
/// without prior knowledge, so it must open every closed receptacle it meets
/// until the task object turns up.
class HouseholdCoupledAgent : public llm::CompletionBackend {
 public:
  llm::CompletionResult complete(const llm::CompletionRequest& request) override;
  std::string kind() const override { return "rule-coupled"; }

 private:
  std::string act(const std::string& prompt);
  std::string navigate_towards(const std::string& target_room);
  std::string explore_step();

  bool initialized_ = false;
  ParsedHouseholdTask task_;
  std::optional<std::string> object_receptacle_;
  std::optional<std::string> object_room_;

  std::map<std::string, std::vector<std::string>> known_exits_;
  std::map<std::string, std::string> seen_receptacle_rooms_;
  std::map<std::string, bool> receptacle_checked_;  // opened or contents seen
  std::map<std::string, bool> known_closed_;        // receptacle -> still closed
  std::vector<std::string> pending_opens_;
  std::vector<std::string> discovered_;
  std::set<std::string> visited_;
  std::string current_room_;
  bool holding_ = false;
  bool transformed_ = false;
};

}  // namespace wese::rule
