#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wese::env {

struct Task {
  std::string id;
  std::string description;
  std::string environment;  // world/corpus binding, e.g. a file path or "household:42"
};

struct Feedback {
  std::string text;
  double reward = 0.0;
  bool done = false;
};

/// Marker sentence appended to the finishing observation; the exploitation
/// loop stops when it sees the done flag that accompanies it.
inline constexpr const char* kCompletedMarker = "Completed.";
inline constexpr const char* kNothingHappens = "Nothing happens.";

/// One live episode: owns the current world state, steps deterministically.
class Episode {
 public:
  virtual ~Episode() = default;

  virtual Feedback reset() = 0;
  virtual Feedback step(const std::string& action) = 0;  // throws UsageError when already done

  virtual bool done() const = 0;
  virtual double cumulative_reward() const = 0;
  /// Cumulative reward that certifies full goal completion (1 for binary and
  /// QA tasks, 100 for milestone-reward tasks).
  virtual double goal_reward() const = 0;
  virtual uint64_t state_fingerprint() const = 0;

  /// Action-space partition: exploration actions are observation-oriented,
  /// exploitation actions are the full grammar.
  virtual bool well_formed(const std::string& action) const = 0;
  virtual bool explore_legal(const std::string& action) const = 0;
  virtual bool exploit_legal(const std::string& action) const = 0;

  virtual std::string fallback_explore_action() const = 0;
  virtual std::string fallback_exploit_action() const = 0;

  virtual const Task& task() const = 0;
  virtual std::string kind() const = 0;
};

}  // namespace wese::env
